//! Minimal writer for synthetic shared objects: enough structure for the
//! reader (sections, a symbol table, read-only data) and for standard ELF
//! tooling to inspect the result. No program headers, no relocations.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElfClass {
    Elf32,
    Elf64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    Function,
    Object,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolPlacement {
    Text,
    Plt,
    Undefined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolBinding {
    Local,
    Global,
    Weak,
}

#[derive(Debug, Clone)]
pub struct SymbolDef {
    name: String,
    kind: SymbolKind,
    placement: SymbolPlacement,
    binding: SymbolBinding,
}

impl SymbolDef {
    pub fn function(name: &str) -> Self {
        Self {
            name: name.to_string(),
            kind: SymbolKind::Function,
            placement: SymbolPlacement::Text,
            binding: SymbolBinding::Global,
        }
    }

    pub fn undefined_function(name: &str) -> Self {
        Self::function(name).placement(SymbolPlacement::Undefined)
    }

    pub fn object(name: &str) -> Self {
        Self {
            kind: SymbolKind::Object,
            ..Self::function(name)
        }
    }

    pub fn placement(mut self, placement: SymbolPlacement) -> Self {
        self.placement = placement;
        self
    }

    pub fn binding(mut self, binding: SymbolBinding) -> Self {
        self.binding = binding;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SymbolTables {
    Full,
    DynamicOnly,
    None,
}

struct PendingSection {
    name: String,
    kind: u32,
    flags: u64,
    data: Vec<u8>,
    link: u32,
    info: u32,
    entsize: u64,
}

#[derive(Debug, Clone)]
pub struct ElfWriter {
    class: ElfClass,
    user_sections: Vec<(String, u32, u64, Vec<u8>)>,
    symbols: Vec<SymbolDef>,
    tables: SymbolTables,
}

impl ElfWriter {
    pub fn new(class: ElfClass) -> Self {
        Self {
            class,
            user_sections: Vec::new(),
            symbols: Vec::new(),
            tables: SymbolTables::Full,
        }
    }

    /// Adds a `.rodata` section (PROGBITS, ALLOC).
    pub fn rodata(self, data: &[u8]) -> Self {
        self.section(".rodata", 1, 0x2, data)
    }

    pub fn section(mut self, name: &str, kind: u32, flags: u64, data: &[u8]) -> Self {
        self.user_sections
            .push((name.to_string(), kind, flags, data.to_vec()));
        self
    }

    pub fn symbol(mut self, symbol: SymbolDef) -> Self {
        self.symbols.push(symbol);
        self
    }

    /// Emit symbols only in `.dynsym`, as after `strip --strip-all`.
    pub fn dynamic_only(mut self) -> Self {
        self.tables = SymbolTables::DynamicOnly;
        self
    }

    /// Emit no symbol table at all.
    pub fn no_symbols(mut self) -> Self {
        self.tables = SymbolTables::None;
        self
    }

    pub fn build(&self) -> Vec<u8> {
        let wide = self.class == ElfClass::Elf64;
        let mut sections = vec_sections(self);

        if self.tables != SymbolTables::None {
            let (table_name, names_name, kind) = match self.tables {
                SymbolTables::Full => (".symtab", ".strtab", 2),
                _ => (".dynsym", ".dynstr", 11),
            };
            let mut names = alloc::vec![0u8];
            let entsize = if wide { 24 } else { 16 };
            let mut table = alloc::vec![0u8; entsize];
            let leading_locals = self
                .symbols
                .iter()
                .take_while(|s| s.binding == SymbolBinding::Local)
                .count();
            for (i, sym) in self.symbols.iter().enumerate() {
                let name_off = names.len() as u32;
                names.extend_from_slice(sym.name.as_bytes());
                names.push(0);
                let bind: u8 = match sym.binding {
                    SymbolBinding::Local => 0,
                    SymbolBinding::Global => 1,
                    SymbolBinding::Weak => 2,
                };
                let kind: u8 = match sym.kind {
                    SymbolKind::Function => 2,
                    SymbolKind::Object => 1,
                };
                let shndx: u16 = match sym.placement {
                    SymbolPlacement::Text => 1,
                    SymbolPlacement::Plt => 2,
                    SymbolPlacement::Undefined => 0,
                };
                let value = if shndx == 0 { 0 } else { 0x1000 + 4 * i as u64 };
                let size = if shndx == 0 { 0 } else { 4 };
                let info = (bind << 4) | kind;
                if wide {
                    table.extend_from_slice(&name_off.to_le_bytes());
                    table.push(info);
                    table.push(0);
                    table.extend_from_slice(&shndx.to_le_bytes());
                    table.extend_from_slice(&value.to_le_bytes());
                    table.extend_from_slice(&(size as u64).to_le_bytes());
                } else {
                    table.extend_from_slice(&name_off.to_le_bytes());
                    table.extend_from_slice(&(value as u32).to_le_bytes());
                    table.extend_from_slice(&(size as u32).to_le_bytes());
                    table.push(info);
                    table.push(0);
                    table.extend_from_slice(&shndx.to_le_bytes());
                }
            }
            let names_index = sections.len() as u32 + 2;
            sections.push(PendingSection {
                name: table_name.to_string(),
                kind,
                flags: if kind == 11 { 0x2 } else { 0 },
                data: table,
                link: names_index,
                info: 1 + leading_locals as u32,
                entsize: entsize as u64,
            });
            sections.push(PendingSection {
                name: names_name.to_string(),
                kind: 3,
                flags: if kind == 11 { 0x2 } else { 0 },
                data: names,
                link: 0,
                info: 0,
                entsize: 0,
            });
        }

        // section name table goes last
        let mut shstr = alloc::vec![0u8];
        let mut name_offsets = Vec::with_capacity(sections.len() + 1);
        for s in &sections {
            name_offsets.push(shstr.len() as u32);
            shstr.extend_from_slice(s.name.as_bytes());
            shstr.push(0);
        }
        let shstr_name = shstr.len() as u32;
        shstr.extend_from_slice(b".shstrtab\0");
        name_offsets.push(shstr_name);
        sections.push(PendingSection {
            name: ".shstrtab".to_string(),
            kind: 3,
            flags: 0,
            data: shstr,
            link: 0,
            info: 0,
            entsize: 0,
        });

        let header_len = if wide { 64 } else { 52 };
        let mut out = alloc::vec![0u8; header_len];
        let mut offsets = Vec::with_capacity(sections.len());
        for s in &sections {
            while out.len() % 8 != 0 {
                out.push(0);
            }
            offsets.push(out.len() as u64);
            out.extend_from_slice(&s.data);
        }
        while out.len() % 8 != 0 {
            out.push(0);
        }
        let shoff = out.len() as u64;
        let shentsize: u16 = if wide { 64 } else { 40 };
        // null section header
        out.extend(core::iter::repeat_n(0u8, shentsize as usize));
        for (i, s) in sections.iter().enumerate() {
            let name = name_offsets[i];
            let addr = if s.flags & 0x2 != 0 {
                0x1000 + offsets[i]
            } else {
                0
            };
            let align: u64 = if s.kind == 2 || s.kind == 11 { 8 } else { 1 };
            if wide {
                out.extend_from_slice(&name.to_le_bytes());
                out.extend_from_slice(&s.kind.to_le_bytes());
                out.extend_from_slice(&s.flags.to_le_bytes());
                out.extend_from_slice(&addr.to_le_bytes());
                out.extend_from_slice(&offsets[i].to_le_bytes());
                out.extend_from_slice(&(s.data.len() as u64).to_le_bytes());
                out.extend_from_slice(&s.link.to_le_bytes());
                out.extend_from_slice(&s.info.to_le_bytes());
                out.extend_from_slice(&align.to_le_bytes());
                out.extend_from_slice(&s.entsize.to_le_bytes());
            } else {
                for v in [
                    name,
                    s.kind,
                    s.flags as u32,
                    addr as u32,
                    offsets[i] as u32,
                    s.data.len() as u32,
                    s.link,
                    s.info,
                    align as u32,
                    s.entsize as u32,
                ] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }

        let shnum = sections.len() as u16 + 1;
        let shstrndx = shnum - 1;
        out[..4].copy_from_slice(b"\x7fELF");
        out[4] = if wide { 2 } else { 1 };
        out[5] = 1; // little-endian
        out[6] = 1; // EV_CURRENT
        let put16 = |out: &mut Vec<u8>, at: usize, v: u16| {
            out[at..at + 2].copy_from_slice(&v.to_le_bytes())
        };
        put16(&mut out, 16, 3); // ET_DYN
        put16(&mut out, 18, if wide { 183 } else { 40 }); // EM_AARCH64 / EM_ARM
        out[20..24].copy_from_slice(&1u32.to_le_bytes());
        if wide {
            out[0x28..0x30].copy_from_slice(&shoff.to_le_bytes());
            put16(&mut out, 0x34, 64);
            put16(&mut out, 0x3a, shentsize);
            put16(&mut out, 0x3c, shnum);
            put16(&mut out, 0x3e, shstrndx);
        } else {
            out[0x20..0x24].copy_from_slice(&(shoff as u32).to_le_bytes());
            put16(&mut out, 0x28, 52);
            put16(&mut out, 0x2e, shentsize);
            put16(&mut out, 0x30, shnum);
            put16(&mut out, 0x32, shstrndx);
        }
        out
    }
}

fn vec_sections(w: &ElfWriter) -> Vec<PendingSection> {
    let mut sections = Vec::new();
    // .text and .plt keep indices 1 and 2 for symbol placement
    sections.push(PendingSection {
        name: ".text".to_string(),
        kind: 1,
        flags: 0x6,
        data: alloc::vec![0xc3; 64],
        link: 0,
        info: 0,
        entsize: 0,
    });
    sections.push(PendingSection {
        name: ".plt".to_string(),
        kind: 1,
        flags: 0x6,
        data: alloc::vec![0x90; 32],
        link: 0,
        info: 0,
        entsize: 16,
    });
    for (name, kind, flags, data) in &w.user_sections {
        sections.push(PendingSection {
            name: name.clone(),
            kind: *kind,
            flags: *flags,
            data: data.clone(),
            link: 0,
            info: 0,
            entsize: 0,
        });
    }
    sections
}
