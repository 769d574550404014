use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

pub type MemId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Location {
    Host,
    Device(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DmemError {
    #[error("memory object {0} does not exist")]
    Unknown(MemId),
    #[error("memory object {0} was freed")]
    UseAfterFree(MemId),
    #[error("memory object has {expected} bytes, got {got}")]
    SizeMismatch { expected: usize, got: usize },
}

#[derive(Debug)]
struct MemObject {
    size: usize,
    copies: BTreeMap<Location, Vec<u8>>,
    /// Locations holding the latest contents; never empty.
    clean: BTreeSet<Location>,
    freed: bool,
}

/// Memory objects with one copy per location and clean/dirty tracking.
///
/// A write at one location makes every other copy dirty. Reading a dirty
/// copy first transfers the latest contents from a clean location, so reads
/// always observe the most recent write.
#[derive(Debug, Default)]
pub struct Dmem {
    objects: Vec<MemObject>,
    transfers: u64,
    dirty_reads: u64,
}

impl Dmem {
    pub fn new() -> Self {
        Dmem::default()
    }

    /// Zero-filled object, clean on the host.
    pub fn create(&mut self, size: usize) -> MemId {
        self.objects.push(MemObject {
            size,
            copies: BTreeMap::from([(Location::Host, vec![0; size])]),
            clean: BTreeSet::from([Location::Host]),
            freed: false,
        });
        self.objects.len() - 1
    }

    pub fn free(&mut self, id: MemId) -> Result<(), DmemError> {
        let obj = self.live(id)?;
        obj.freed = true;
        obj.copies.clear();
        Ok(())
    }

    pub fn write_host(&mut self, id: MemId, data: &[u8]) -> Result<(), DmemError> {
        self.write(id, Location::Host, data)
    }

    /// Host view of the object, flushed from a device if the host copy is
    /// dirty.
    pub fn read_host(&mut self, id: MemId) -> Result<Vec<u8>, DmemError> {
        self.read(id, Location::Host).map(|(data, _)| data)
    }

    /// Reads at `loc`; the flag tells whether a transfer was needed.
    pub fn read(&mut self, id: MemId, loc: Location) -> Result<(Vec<u8>, bool), DmemError> {
        let obj = self.live(id)?;
        if obj.clean.contains(&loc) {
            return Ok((obj.copies[&loc].clone(), false));
        }
        let source = if obj.clean.contains(&Location::Host) {
            Location::Host
        } else {
            *obj.clean.iter().next().expect("some copy is clean")
        };
        let data = obj.copies[&source].clone();
        obj.copies.insert(loc, data.clone());
        obj.clean.insert(loc);
        self.dirty_reads += 1;
        self.transfers += 1;
        Ok((data, true))
    }

    pub fn write(&mut self, id: MemId, loc: Location, data: &[u8]) -> Result<(), DmemError> {
        let obj = self.live(id)?;
        if data.len() != obj.size {
            return Err(DmemError::SizeMismatch { expected: obj.size, got: data.len() });
        }
        obj.copies.insert(loc, data.to_vec());
        obj.clean.clear();
        obj.clean.insert(loc);
        Ok(())
    }

    pub fn size(&mut self, id: MemId) -> Result<usize, DmemError> {
        Ok(self.live(id)?.size)
    }

    pub fn is_clean(&mut self, id: MemId, loc: Location) -> Result<bool, DmemError> {
        Ok(self.live(id)?.clean.contains(&loc))
    }

    /// Total transfers performed.
    pub fn transfers(&self) -> u64 {
        self.transfers
    }

    /// Reads that found their copy dirty.
    pub fn dirty_reads(&self) -> u64 {
        self.dirty_reads
    }

    fn live(&mut self, id: MemId) -> Result<&mut MemObject, DmemError> {
        match self.objects.get_mut(id) {
            None => Err(DmemError::Unknown(id)),
            Some(o) if o.freed => Err(DmemError::UseAfterFree(id)),
            Some(o) => Ok(o),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn device_read_after_host_write_transfers_once() {
        let mut m = Dmem::new();
        let id = m.create(4);
        m.write_host(id, &[1, 2, 3, 4]).unwrap();
        assert_eq!(m.read(id, Location::Device(0)).unwrap(), (vec![1, 2, 3, 4], true));
        assert_eq!(m.read(id, Location::Device(0)).unwrap(), (vec![1, 2, 3, 4], false));
        assert_eq!(m.transfers(), 1);
        m.read_host(id).unwrap();
        assert_eq!(m.transfers(), 1);
    }

    #[test]
    fn host_read_after_device_write_flushes() {
        let mut m = Dmem::new();
        let id = m.create(2);
        m.write(id, Location::Device(3), &[9, 9]).unwrap();
        assert!(!m.is_clean(id, Location::Host).unwrap());
        assert_eq!(m.read_host(id).unwrap(), [9, 9]);
        assert_eq!(m.transfers(), 1);
        assert!(m.is_clean(id, Location::Host).unwrap());
    }

    #[test]
    fn errors() {
        let mut m = Dmem::new();
        let id = m.create(2);
        assert_eq!(m.write_host(id, &[1]), Err(DmemError::SizeMismatch { expected: 2, got: 1 }));
        m.free(id).unwrap();
        assert_eq!(m.read_host(id), Err(DmemError::UseAfterFree(id)));
        assert_eq!(m.read_host(5), Err(DmemError::Unknown(5)));
    }
}
