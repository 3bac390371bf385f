//! Byte-level helpers shared by operation and header forging.

use tzdesk_michelson::Address;

use crate::error::ProtocolError;

/// Unsigned LEB128, 7 bits per byte, low group first.
pub fn write_n(mut v: u64, out: &mut Vec<u8>) {
    loop {
        let b = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(b);
            return;
        }
        out.push(b | 0x80);
    }
}

/// Kind byte then the 20-byte hash.
pub fn write_address(a: &Address, out: &mut Vec<u8>) {
    out.extend(a.to_bytes());
}

pub fn write_bytes(b: &[u8], out: &mut Vec<u8>) {
    out.extend((b.len() as u32).to_be_bytes());
    out.extend(b);
}

pub struct Reader<'a> {
    buf: &'a [u8],
    pub at: usize,
}

fn truncated() -> ProtocolError {
    ProtocolError::Malformed("unexpected end of bytes".into())
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Reader<'a> {
        Reader { buf, at: 0 }
    }

    pub fn done(&self) -> bool {
        self.at >= self.buf.len()
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], ProtocolError> {
        let s = self.buf.get(self.at..self.at + n).ok_or_else(truncated)?;
        self.at += n;
        Ok(s)
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N], ProtocolError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    pub fn u8(&mut self) -> Result<u8, ProtocolError> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, ProtocolError> {
        Ok(u16::from_be_bytes(self.array()?))
    }

    pub fn u32(&mut self) -> Result<u32, ProtocolError> {
        Ok(u32::from_be_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64, ProtocolError> {
        Ok(u64::from_be_bytes(self.array()?))
    }

    pub fn i64(&mut self) -> Result<i64, ProtocolError> {
        Ok(i64::from_be_bytes(self.array()?))
    }

    pub fn n(&mut self) -> Result<u64, ProtocolError> {
        let mut v: u64 = 0;
        let mut shift = 0;
        loop {
            let b = self.u8()?;
            if shift > 63 || (shift == 63 && b & 0x7e != 0) {
                return Err(ProtocolError::Malformed("integer too large".into()));
            }
            v |= ((b & 0x7f) as u64) << shift;
            if b & 0x80 == 0 {
                return Ok(v);
            }
            shift += 7;
        }
    }

    pub fn address(&mut self) -> Result<Address, ProtocolError> {
        Address::from_bytes(self.take(21)?).ok_or_else(|| ProtocolError::Malformed("bad address".into()))
    }

    pub fn bytes(&mut self) -> Result<&'a [u8], ProtocolError> {
        let n = self.u32()? as usize;
        self.take(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leb128() {
        for v in [0u64, 1, 127, 128, 1269, 10_200, u64::MAX] {
            let mut out = Vec::new();
            write_n(v, &mut out);
            assert_eq!(Reader::new(&out).n().unwrap(), v);
        }
        let mut out = Vec::new();
        write_n(1269, &mut out);
        assert_eq!(out, vec![0xf5, 0x09]);
    }
}
