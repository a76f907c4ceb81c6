//! LEB128 integer coding.
//!
//! Writers always produce the shortest encoding. Readers accept padded
//! encodings up to the maximum byte length of the target width, but reject
//! encodings whose final byte carries bits that do not fit the width.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LebError {
    /// Input ended before the terminating byte.
    Truncated,
    /// More continuation bytes than the width allows.
    TooLong,
    /// Final byte has bits set outside the target width.
    Overflow,
}

impl fmt::Display for LebError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LebError::Truncated => f.write_str("truncated LEB128 integer"),
            LebError::TooLong => f.write_str("LEB128 integer too long"),
            LebError::Overflow => f.write_str("LEB128 integer out of range"),
        }
    }
}

/// Shortest unsigned encoding of `value`.
pub fn encode_u32(value: u32) -> Vec<u8> {
    let mut out = Vec::with_capacity(5);
    write_u32(&mut out, value);
    out
}

pub fn write_u32(out: &mut Vec<u8>, mut value: u32) {
    loop {
        let byte = (value & 0x7f) as u8;
        value >>= 7;
        if value == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

pub fn write_i32(out: &mut Vec<u8>, value: i32) {
    write_i64(out, i64::from(value));
}

pub fn write_i64(out: &mut Vec<u8>, mut value: i64) {
    loop {
        let byte = (value & 0x7f) as u8;
        value >>= 7;
        let sign_clear = byte & 0x40 == 0;
        if (value == 0 && sign_clear) || (value == -1 && !sign_clear) {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

/// Decodes an unsigned 32-bit integer, returning the value and the number of
/// bytes consumed.
pub fn read_u32(bytes: &[u8]) -> Result<(u32, usize), LebError> {
    let mut result: u32 = 0;
    for (i, &byte) in bytes.iter().enumerate() {
        if i == 4 {
            if byte & 0x80 != 0 {
                return Err(LebError::TooLong);
            }
            if byte & 0x70 != 0 {
                return Err(LebError::Overflow);
            }
        }
        result |= u32::from(byte & 0x7f) << (7 * i);
        if byte & 0x80 == 0 {
            return Ok((result, i + 1));
        }
    }
    Err(LebError::Truncated)
}

pub fn read_i32(bytes: &[u8]) -> Result<(i32, usize), LebError> {
    let mut result: i32 = 0;
    for (i, &byte) in bytes.iter().enumerate() {
        let shift = 7 * i as u32;
        if i == 4 {
            if byte & 0x80 != 0 {
                return Err(LebError::TooLong);
            }
            // bits 32.. of the final group must be a sign extension of bit 31
            let sign_and_unused = byte & 0x78;
            if sign_and_unused != 0 && sign_and_unused != 0x78 {
                return Err(LebError::Overflow);
            }
            result |= i32::from(byte & 0x7f) << shift;
            return Ok((result, i + 1));
        }
        result |= i32::from(byte & 0x7f) << shift;
        if byte & 0x80 == 0 {
            let shift = shift + 7;
            if byte & 0x40 != 0 {
                result |= -1i32 << shift;
            }
            return Ok((result, i + 1));
        }
    }
    Err(LebError::Truncated)
}

pub fn read_i64(bytes: &[u8]) -> Result<(i64, usize), LebError> {
    let mut result: i64 = 0;
    for (i, &byte) in bytes.iter().enumerate() {
        let shift = 7 * i as u32;
        if i == 9 {
            if byte & 0x80 != 0 {
                return Err(LebError::TooLong);
            }
            let sign_and_unused = byte & 0x7f;
            if sign_and_unused != 0 && sign_and_unused != 0x7f {
                return Err(LebError::Overflow);
            }
            result |= i64::from(byte & 0x7f) << shift;
            return Ok((result, i + 1));
        }
        result |= i64::from(byte & 0x7f) << shift;
        if byte & 0x80 == 0 {
            let shift = shift + 7;
            if byte & 0x40 != 0 {
                result |= -1i64 << shift;
            }
            return Ok((result, i + 1));
        }
    }
    Err(LebError::Truncated)
}
