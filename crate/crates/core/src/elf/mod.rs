//! Little-endian ELF32/ELF64 reader that pulls out the two evidence streams
//! used for fingerprinting: printable strings from read-only data and the
//! names of functions defined by the object.

mod synth;

pub use synth::{ElfClass, ElfWriter, SymbolBinding, SymbolDef, SymbolKind, SymbolPlacement};

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub const DEFAULT_MIN_STRING_LEN: usize = 4;

const SHT_SYMTAB: u32 = 2;
const SHT_NOBITS: u32 = 8;
const SHT_DYNSYM: u32 = 11;
const STT_FUNC: u8 = 2;
const STT_GNU_IFUNC: u8 = 10;
const SHN_UNDEF: u16 = 0;
const SHN_LORESERVE: u16 = 0xff00;
const SHN_XINDEX: u16 = 0xffff;

/// Sections holding PLT/GOT linkage stubs; symbols placed there are not
/// implementations.
const STUB_SECTIONS: [&str; 7] = [
    ".plt", ".plt.got", ".plt.sec", ".got", ".got.plt", ".iplt", ".igot",
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ElfError {
    #[error("not an ELF file")]
    NotAnElf,
    #[error("malformed ELF: {0}")]
    MalformedElf(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub name: String,
    pub kind: u32,
    pub flags: u64,
    pub offset: u64,
    pub size: u64,
    pub link: u32,
    pub entsize: u64,
}

impl Section {
    fn has_file_data(&self) -> bool {
        self.kind != SHT_NOBITS
    }

    pub fn is_read_only_data(&self) -> bool {
        self.has_file_data()
            && (self.name == ".rodata"
                || self.name == ".rodata1"
                || self.name.starts_with(".rodata."))
    }
}

/// A parsed shared object plus its extracted evidence.
///
/// `strings` and `functions` are filled at parse time with the default
/// minimum string length; call [`ElfArtifact::extract_strings`] for other
/// lengths.
#[derive(Debug, Clone)]
pub struct ElfArtifact<'a> {
    bytes: &'a [u8],
    pub class: ElfClass,
    pub machine: u16,
    pub sections: Vec<Section>,
    pub strings: Vec<String>,
    pub functions: Vec<String>,
    pub stripped: bool,
}

pub fn parse_elf(bytes: &[u8]) -> Result<ElfArtifact<'_>, ElfError> {
    parse_elf_with(bytes, DEFAULT_MIN_STRING_LEN)
}

pub fn parse_elf_with(bytes: &[u8], min_string_len: usize) -> Result<ElfArtifact<'_>, ElfError> {
    if bytes.len() < 4 || &bytes[..4] != b"\x7fELF" {
        return Err(ElfError::NotAnElf);
    }
    if bytes.len() < 16 {
        return Err(ElfError::MalformedElf("truncated identification"));
    }
    let class = match bytes[4] {
        1 => ElfClass::Elf32,
        2 => ElfClass::Elf64,
        _ => return Err(ElfError::MalformedElf("unknown class")),
    };
    match bytes[5] {
        1 => {}
        2 => {
            return Err(ElfError::MalformedElf(
                "big-endian objects are not supported",
            ))
        }
        _ => return Err(ElfError::MalformedElf("unknown data encoding")),
    }
    let header_len = match class {
        ElfClass::Elf32 => 52,
        ElfClass::Elf64 => 64,
    };
    if bytes.len() < header_len {
        return Err(ElfError::MalformedElf("truncated header"));
    }
    let r = Reader { bytes, class };
    let machine = r.u16(18)?;
    let (shoff, shentsize, shnum, shstrndx) = match class {
        ElfClass::Elf32 => (
            r.u32(0x20)? as u64,
            r.u16(0x2e)?,
            r.u16(0x30)?,
            r.u16(0x32)?,
        ),
        ElfClass::Elf64 => (r.u64(0x28)?, r.u16(0x3a)?, r.u16(0x3c)?, r.u16(0x3e)?),
    };
    let sections = read_sections(&r, shoff, shentsize, shnum, shstrndx)?;
    let mut artifact = ElfArtifact {
        bytes,
        class,
        machine,
        sections,
        strings: Vec::new(),
        functions: Vec::new(),
        stripped: true,
    };
    artifact.strings = artifact.extract_strings(min_string_len);
    artifact.functions = artifact.extract_functions();
    artifact.stripped = artifact.functions.is_empty();
    Ok(artifact)
}

impl<'a> ElfArtifact<'a> {
    pub fn bytes(&self) -> &'a [u8] {
        self.bytes
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn section_data(&self, section: &Section) -> &'a [u8] {
        if !section.has_file_data() {
            return &[];
        }
        // bounds were validated in parse_elf
        &self.bytes[section.offset as usize..(section.offset + section.size) as usize]
    }

    /// Maximal runs of printable ASCII (0x20..=0x7E) at least `min_len` long,
    /// taken from the read-only data sections in section order. Objects with
    /// no such section are scanned whole.
    pub fn extract_strings(&self, min_len: usize) -> Vec<String> {
        let mut out = Vec::new();
        let mut any = false;
        for s in self.sections.iter().filter(|s| s.is_read_only_data()) {
            any = true;
            printable_runs(self.section_data(s), min_len, &mut out);
        }
        if !any {
            printable_runs(self.bytes, min_len, &mut out);
        }
        out
    }

    /// Names of function symbols defined in this object, in symbol-table
    /// order without duplicates. The full symbol table is used when present,
    /// the dynamic one otherwise. Undefined imports and symbols living in
    /// PLT/GOT stub sections are skipped.
    pub fn extract_functions(&self) -> Vec<String> {
        let table_kind = if self.sections.iter().any(|s| s.kind == SHT_SYMTAB) {
            SHT_SYMTAB
        } else {
            SHT_DYNSYM
        };
        let r = Reader {
            bytes: self.bytes,
            class: self.class,
        };
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for table in self.sections.iter().filter(|s| s.kind == table_kind) {
            let Some(strtab) = self.sections.get(table.link as usize) else {
                continue;
            };
            let names = self.section_data(strtab);
            let min_entsize = match self.class {
                ElfClass::Elf32 => 16,
                ElfClass::Elf64 => 24,
            };
            let entsize = if table.entsize >= min_entsize {
                table.entsize
            } else {
                min_entsize
            };
            let count = table.size / entsize;
            // entry 0 is the reserved null symbol
            for i in 1..count {
                let at = (table.offset + i * entsize) as usize;
                let Ok(sym) = r.symbol(at) else { break };
                let kind = sym.info & 0xf;
                if kind != STT_FUNC && kind != STT_GNU_IFUNC {
                    continue;
                }
                if sym.shndx == SHN_UNDEF {
                    continue;
                }
                if sym.shndx < SHN_LORESERVE || sym.shndx == SHN_XINDEX {
                    if let Some(sec) = self.sections.get(sym.shndx as usize) {
                        if STUB_SECTIONS.contains(&sec.name.as_str()) {
                            continue;
                        }
                    }
                }
                let Some(name) = c_str(names, sym.name as usize) else {
                    continue;
                };
                if name.is_empty() {
                    continue;
                }
                if seen.insert(name) {
                    out.push(name.to_string());
                }
            }
        }
        out
    }

    /// True iff no defined function symbol could be recovered.
    pub fn is_stripped(&self) -> bool {
        self.functions.is_empty()
    }
}

/// Appends every maximal printable-ASCII run of length `>= min_len`.
pub fn printable_runs(data: &[u8], min_len: usize, out: &mut Vec<String>) {
    let min_len = min_len.max(1);
    let mut start = None;
    for (i, &b) in data.iter().enumerate() {
        if (0x20..=0x7e).contains(&b) {
            start.get_or_insert(i);
        } else if let Some(s) = start.take() {
            push_run(&data[s..i], min_len, out);
        }
    }
    if let Some(s) = start {
        push_run(&data[s..], min_len, out);
    }
}

fn push_run(run: &[u8], min_len: usize, out: &mut Vec<String>) {
    if run.len() >= min_len {
        // printable ASCII is valid UTF-8
        out.push(String::from_utf8_lossy(run).into_owned());
    }
}

fn c_str(table: &[u8], offset: usize) -> Option<&str> {
    let tail = table.get(offset..)?;
    let end = tail.iter().position(|&b| b == 0)?;
    core::str::from_utf8(&tail[..end]).ok()
}

fn read_sections(
    r: &Reader<'_>,
    shoff: u64,
    shentsize: u16,
    shnum: u16,
    shstrndx: u16,
) -> Result<Vec<Section>, ElfError> {
    if shoff == 0 {
        return Ok(Vec::new());
    }
    let min_entsize: u16 = match r.class {
        ElfClass::Elf32 => 40,
        ElfClass::Elf64 => 64,
    };
    if shentsize < min_entsize {
        return Err(ElfError::MalformedElf("section header entry too small"));
    }
    let mut count = shnum as u64;
    if count == 0 {
        // extended numbering: the real count lives in section 0's size
        count = r.section_header(shoff as usize)?.size;
    }
    let end = count
        .checked_mul(shentsize as u64)
        .and_then(|n| n.checked_add(shoff))
        .ok_or(ElfError::MalformedElf("section header table overflows"))?;
    if end > r.bytes.len() as u64 {
        return Err(ElfError::MalformedElf(
            "section header table past end of file",
        ));
    }
    let mut raw = Vec::with_capacity(count as usize);
    for i in 0..count {
        let h = r.section_header((shoff + i * shentsize as u64) as usize)?;
        if h.kind != SHT_NOBITS {
            let data_end = h
                .offset
                .checked_add(h.size)
                .ok_or(ElfError::MalformedElf("section extent overflows"))?;
            if data_end > r.bytes.len() as u64 {
                return Err(ElfError::MalformedElf("section data past end of file"));
            }
        }
        raw.push(h);
    }
    let mut names_index = shstrndx as u64;
    if shstrndx == SHN_XINDEX {
        names_index = raw.first().map_or(0, |h| h.link as u64);
    }
    let names: &[u8] = if names_index == 0 {
        &[]
    } else {
        let h = raw.get(names_index as usize).ok_or(ElfError::MalformedElf(
            "section name table index out of range",
        ))?;
        &r.bytes[h.offset as usize..(h.offset + h.size) as usize]
    };
    raw.into_iter()
        .map(|h| {
            let name = if names.is_empty() {
                String::new()
            } else {
                c_str(names, h.name as usize)
                    .ok_or(ElfError::MalformedElf("section name out of range"))?
                    .to_string()
            };
            Ok(Section {
                name,
                kind: h.kind,
                flags: h.flags,
                offset: h.offset,
                size: h.size,
                link: h.link,
                entsize: h.entsize,
            })
        })
        .collect()
}

struct RawSectionHeader {
    name: u32,
    kind: u32,
    flags: u64,
    offset: u64,
    size: u64,
    link: u32,
    entsize: u64,
}

struct RawSymbol {
    name: u32,
    info: u8,
    shndx: u16,
}

struct Reader<'a> {
    bytes: &'a [u8],
    class: ElfClass,
}

impl Reader<'_> {
    fn slice<const N: usize>(&self, at: usize) -> Result<[u8; N], ElfError> {
        self.bytes
            .get(
                at..at
                    .checked_add(N)
                    .ok_or(ElfError::MalformedElf("offset overflow"))?,
            )
            .map(|s| s.try_into().expect("slice length"))
            .ok_or(ElfError::MalformedElf("read past end of file"))
    }

    fn u16(&self, at: usize) -> Result<u16, ElfError> {
        self.slice::<2>(at).map(u16::from_le_bytes)
    }

    fn u32(&self, at: usize) -> Result<u32, ElfError> {
        self.slice::<4>(at).map(u32::from_le_bytes)
    }

    fn u64(&self, at: usize) -> Result<u64, ElfError> {
        self.slice::<8>(at).map(u64::from_le_bytes)
    }

    fn word(&self, at: usize) -> Result<u64, ElfError> {
        match self.class {
            ElfClass::Elf32 => self.u32(at).map(u64::from),
            ElfClass::Elf64 => self.u64(at),
        }
    }

    fn section_header(&self, at: usize) -> Result<RawSectionHeader, ElfError> {
        Ok(match self.class {
            ElfClass::Elf32 => RawSectionHeader {
                name: self.u32(at)?,
                kind: self.u32(at + 4)?,
                flags: self.word(at + 8)?,
                offset: self.word(at + 16)?,
                size: self.word(at + 20)?,
                link: self.u32(at + 24)?,
                entsize: self.word(at + 36)?,
            },
            ElfClass::Elf64 => RawSectionHeader {
                name: self.u32(at)?,
                kind: self.u32(at + 4)?,
                flags: self.word(at + 8)?,
                offset: self.word(at + 24)?,
                size: self.word(at + 32)?,
                link: self.u32(at + 40)?,
                entsize: self.word(at + 56)?,
            },
        })
    }

    fn symbol(&self, at: usize) -> Result<RawSymbol, ElfError> {
        Ok(match self.class {
            ElfClass::Elf32 => RawSymbol {
                name: self.u32(at)?,
                info: self.slice::<1>(at + 12)?[0],
                shndx: self.u16(at + 14)?,
            },
            ElfClass::Elf64 => RawSymbol {
                name: self.u32(at)?,
                info: self.slice::<1>(at + 4)?[0],
                shndx: self.u16(at + 6)?,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn sample(class: ElfClass) -> Vec<u8> {
        ElfWriter::new(class)
            .rodata(b"ab\0General Configuration for OpenCV 4.1.0\0x")
            .symbol(SymbolDef::function("png_read_info"))
            .symbol(SymbolDef::function("main"))
            .symbol(SymbolDef::undefined_function("memcpy"))
            .symbol(SymbolDef::object("png_libpng_ver"))
            .symbol(SymbolDef::function("main").binding(SymbolBinding::Local))
            .symbol(SymbolDef::function("stub_entry").placement(SymbolPlacement::Plt))
            .build()
    }

    #[test]
    fn parses_both_classes() {
        for class in [ElfClass::Elf32, ElfClass::Elf64] {
            let bytes = sample(class);
            let elf = parse_elf(&bytes).unwrap();
            assert_eq!(elf.class, class);
            assert!(!elf.sections.is_empty());
            assert!(elf.section(".rodata").is_some());
            assert!(elf
                .strings
                .iter()
                .any(|s| s == "General Configuration for OpenCV 4.1.0"));
            assert_eq!(elf.functions, vec!["png_read_info", "main"]);
            assert!(!elf.stripped);
        }
    }

    #[test]
    fn short_input_is_not_elf() {
        assert_eq!(parse_elf(&[1, 2, 3]).unwrap_err(), ElfError::NotAnElf);
        assert_eq!(
            parse_elf(b"MZ\x90\x00garbage").unwrap_err(),
            ElfError::NotAnElf
        );
    }

    #[test]
    fn section_past_eof_is_malformed() {
        let mut bytes = sample(ElfClass::Elf64);
        let elf = parse_elf(&bytes).unwrap();
        let idx = elf
            .sections
            .iter()
            .position(|s| s.name == ".rodata")
            .unwrap();
        let shoff = u64::from_le_bytes(bytes[0x28..0x30].try_into().unwrap()) as usize;
        let at = shoff + idx * 64 + 24;
        bytes[at..at + 8].copy_from_slice(&(1u64 << 40).to_le_bytes());
        assert!(matches!(parse_elf(&bytes), Err(ElfError::MalformedElf(_))));
    }

    #[test]
    fn section_table_past_eof_is_malformed() {
        let mut bytes = sample(ElfClass::Elf32);
        let len = bytes.len() as u32;
        bytes[0x20..0x24].copy_from_slice(&(len - 8).to_le_bytes());
        assert!(matches!(parse_elf(&bytes), Err(ElfError::MalformedElf(_))));
    }

    #[test]
    fn big_endian_rejected() {
        let mut bytes = sample(ElfClass::Elf64);
        bytes[5] = 2;
        assert!(matches!(parse_elf(&bytes), Err(ElfError::MalformedElf(_))));
    }

    #[test]
    fn non_printable_section_yields_nothing() {
        let data: Vec<u8> = (0u8..0x20).cycle().take(200).collect();
        let bytes = ElfWriter::new(ElfClass::Elf64).rodata(&data).build();
        assert!(parse_elf(&bytes).unwrap().strings.is_empty());
    }

    #[test]
    fn min_len_is_respected() {
        let bytes = ElfWriter::new(ElfClass::Elf64)
            .rodata(b"abc\0abcd\0ab\x01abcdefgh")
            .build();
        let elf = parse_elf(&bytes).unwrap();
        assert_eq!(elf.extract_strings(4), vec!["abcd", "abcdefgh"]);
        assert_eq!(
            elf.extract_strings(1),
            vec!["abc", "abcd", "ab", "abcdefgh"]
        );
        assert_eq!(elf.extract_strings(0), elf.extract_strings(1));
    }

    #[test]
    fn whole_file_fallback_without_rodata() {
        let bytes = ElfWriter::new(ElfClass::Elf64)
            .section(".data", 1, 3, b"\0Lavc58.54.100\0")
            .build();
        let elf = parse_elf(&bytes).unwrap();
        assert!(elf.section(".rodata").is_none());
        assert!(elf.strings.iter().any(|s| s == "Lavc58.54.100"));
    }

    #[test]
    fn only_imports_counts_as_stripped() {
        let bytes = ElfWriter::new(ElfClass::Elf64)
            .symbol(SymbolDef::undefined_function("memcpy"))
            .symbol(SymbolDef::undefined_function("malloc"))
            .build();
        let elf = parse_elf(&bytes).unwrap();
        assert!(elf.functions.is_empty());
        assert!(elf.is_stripped());
    }

    #[test]
    fn no_symbol_table_is_stripped() {
        let bytes = ElfWriter::new(ElfClass::Elf32)
            .rodata(b"OpenSSL 1.0.1f 6 Jan 2014")
            .no_symbols()
            .build();
        let elf = parse_elf(&bytes).unwrap();
        assert!(elf.stripped);
        assert!(elf.functions.is_empty());
    }

    #[test]
    fn dynsym_used_when_symtab_absent() {
        let bytes = ElfWriter::new(ElfClass::Elf64)
            .dynamic_only()
            .symbol(SymbolDef::function("SSL_CTX_new"))
            .symbol(SymbolDef::undefined_function("free"))
            .build();
        let elf = parse_elf(&bytes).unwrap();
        assert!(elf.section(".symtab").is_none());
        assert_eq!(elf.functions, vec!["SSL_CTX_new"]);
    }

    proptest! {
        #[test]
        fn strings_ignore_trailing_padding(
            data in proptest::collection::vec(any::<u8>(), 0..300),
            pad in proptest::collection::vec(0u8..0x20, 1..40),
            min_len in 1usize..8,
        ) {
            let mut a = Vec::new();
            printable_runs(&data, min_len, &mut a);
            let mut padded = data.clone();
            padded.extend_from_slice(&pad);
            let mut b = Vec::new();
            printable_runs(&padded, min_len, &mut b);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn strings_are_found_in_source(data in proptest::collection::vec(any::<u8>(), 0..300), min_len in 1usize..8) {
            let mut out = Vec::new();
            printable_runs(&data, min_len, &mut out);
            for s in &out {
                prop_assert!(s.len() >= min_len);
                prop_assert!(data.windows(s.len()).any(|w| w == s.as_bytes()));
            }
        }

        #[test]
        fn section_names_round_trip(
            names in proptest::collection::btree_set("\\.[a-z_]{1,10}", 0..8),
            elf64 in any::<bool>(),
        ) {
            let class = if elf64 { ElfClass::Elf64 } else { ElfClass::Elf32 };
            let mut w = ElfWriter::new(class).no_symbols();
            for n in &names {
                w = w.section(n, 1, 2, n.as_bytes());
            }
            let bytes = w.build();
            let elf = parse_elf(&bytes).unwrap();
            let parsed: Vec<&str> = elf.sections.iter().map(|s| s.name.as_str()).collect();
            for n in &names {
                prop_assert!(parsed.contains(&n.as_str()));
                let s = elf.section(n).unwrap();
                prop_assert_eq!(elf.section_data(s), n.as_bytes());
            }
        }

        #[test]
        fn functions_never_include_undefined(
            defined in proptest::collection::btree_set("[a-z][a-z0-9_]{0,12}", 0..10),
            imported in proptest::collection::btree_set("[A-Z][a-z0-9_]{0,12}", 0..10),
        ) {
            let mut w = ElfWriter::new(ElfClass::Elf64);
            for d in &defined {
                w = w.symbol(SymbolDef::function(d));
            }
            for i in &imported {
                w = w.symbol(SymbolDef::undefined_function(i));
            }
            let bytes = w.build();
            let elf = parse_elf(&bytes).unwrap();
            for f in &elf.functions {
                prop_assert!(!imported.contains(f));
            }
            prop_assert_eq!(elf.functions.len(), defined.len());
            prop_assert_eq!(elf.stripped, defined.is_empty());
        }
    }
}
