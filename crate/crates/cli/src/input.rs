//! Necklace files and update scripts.

use std::fmt;

use necklace_core::necklace::colors_from_symbols;
use necklace_core::Color;

use crate::CliError;

/// A parsed necklace file: colors, the symbol palette and an optional `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NecklaceFile {
    pub colors: Vec<Color>,
    pub palette: Vec<char>,
    pub k: Option<usize>,
}

impl NecklaceFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut k = None;
        let mut symbols = String::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(v) = line.strip_prefix("k=") {
                if k.is_some() || !symbols.is_empty() {
                    return Err(CliError::parse(i + 1, "header must come first"));
                }
                let v = v
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| CliError::parse(i + 1, e))?;
                if v == 0 {
                    return Err(CliError::parse(i + 1, "k must be positive"));
                }
                k = Some(v);
                continue;
            }
            if let Some(ch) = line.chars().find(|c| !c.is_ascii_graphic()) {
                return Err(CliError::parse(i + 1, format!("bad symbol {ch:?}")));
            }
            symbols.push_str(line);
        }
        if symbols.is_empty() {
            return Err(CliError::parse(0, "no beads"));
        }
        let (colors, palette) = colors_from_symbols(&symbols);
        Ok(NecklaceFile { colors, palette, k })
    }
}

/// One script command. Positions are 1-based as written.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Swap(usize),
    Reloc(usize, usize),
    Batch(Vec<(usize, usize)>),
    Insert(char, Vec<usize>),
    Delete(Vec<usize>),
    Cuts,
    Verify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Swap(_) => "SWAP",
            Command::Reloc(..) => "RELOC",
            Command::Batch(_) => "BATCH",
            Command::Insert(..) => "INSERT",
            Command::Delete(_) => "DELETE",
            Command::Cuts => "CUTS",
            Command::Verify => "VERIFY",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())?;
        match self {
            Command::Swap(j) => write!(f, " {j}"),
            Command::Reloc(a, b) => write!(f, " {a} {b}"),
            Command::Batch(moves) => moves.iter().try_for_each(|(a, b)| write!(f, " ({a},{b})")),
            Command::Insert(c, pos) => {
                write!(f, " {c}")?;
                pos.iter().try_for_each(|p| write!(f, " {p}"))
            }
            Command::Delete(pos) => pos.iter().try_for_each(|p| write!(f, " {p}")),
            Command::Cuts | Command::Verify => Ok(()),
        }
    }
}

/// Parses a script: one command per line, `#` starts a comment.
pub fn parse_script(text: &str) -> Result<Vec<Command>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lineno = i + 1;
        // "(1,5) (2,7)" and "1 5 2 7" read the same
        let cleaned: String = line
            .chars()
            .map(|c| if matches!(c, '(' | ')' | ',') { ' ' } else { c })
            .collect();
        let mut words = cleaned.split_whitespace();
        let op = words.next().unwrap_or_default().to_ascii_uppercase();
        let rest: Vec<&str> = words.collect();
        let nums = |xs: &[&str]| -> Result<Vec<usize>, CliError> {
            xs.iter()
                .map(|w| match w.parse::<usize>() {
                    Ok(0) => Err(CliError::parse(lineno, "positions are 1-based")),
                    Ok(v) => Ok(v),
                    Err(e) => Err(CliError::parse(lineno, format!("{w:?}: {e}"))),
                })
                .collect()
        };
        let cmd = match op.as_str() {
            "SWAP" => match nums(&rest)?.as_slice() {
                [j] => Command::Swap(*j),
                _ => return Err(CliError::parse(lineno, "SWAP takes one position")),
            },
            "RELOC" => match nums(&rest)?.as_slice() {
                [a, b] => Command::Reloc(*a, *b),
                _ => return Err(CliError::parse(lineno, "RELOC takes two positions")),
            },
            "BATCH" => {
                let v = nums(&rest)?;
                if v.len() % 2 != 0 {
                    return Err(CliError::parse(lineno, "BATCH takes position pairs"));
                }
                Command::Batch(v.chunks(2).map(|p| (p[0], p[1])).collect())
            }
            "INSERT" => {
                let Some((sym, pos)) = rest.split_first() else {
                    return Err(CliError::parse(lineno, "INSERT needs a color symbol"));
                };
                let mut chars = sym.chars();
                let (Some(c), None) = (chars.next(), chars.next()) else {
                    return Err(CliError::parse(lineno, "color must be one symbol"));
                };
                Command::Insert(c, nums(pos)?)
            }
            "DELETE" => Command::Delete(nums(&rest)?),
            "CUTS" | "VERIFY" if !rest.is_empty() => {
                return Err(CliError::parse(lineno, format!("{op} takes no arguments")))
            }
            "CUTS" => Command::Cuts,
            "VERIFY" => Command::Verify,
            other => {
                return Err(CliError::parse(
                    lineno,
                    format!("unknown command {other:?}"),
                ))
            }
        };
        out.push(cmd);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_symbols() {
        let f = NecklaceFile::parse("k=3\nRRBRRB\nBBRBRB\n").unwrap();
        assert_eq!(f.k, Some(3));
        assert_eq!(f.colors.len(), 12);
        assert_eq!(f.palette, vec!['R', 'B']);
        assert_eq!(f.colors[2], Color::BLUE);
    }

    #[test]
    fn header_is_optional() {
        assert_eq!(NecklaceFile::parse("RB").unwrap().k, None);
        assert!(NecklaceFile::parse("RB\nk=2").is_err());
        assert!(NecklaceFile::parse("k=0\nRB").is_err());
        assert!(NecklaceFile::parse("k=2\n").is_err());
    }

    #[test]
    fn commands() {
        let s =
            "SWAP 8\nreloc 1 4 # note\nBATCH (1,5) (2,7)\nINSERT R 1 3\nDELETE 2\n\nCUTS\nVERIFY\n";
        let cmds = parse_script(s).unwrap();
        assert_eq!(
            cmds,
            vec![
                Command::Swap(8),
                Command::Reloc(1, 4),
                Command::Batch(vec![(1, 5), (2, 7)]),
                Command::Insert('R', vec![1, 3]),
                Command::Delete(vec![2]),
                Command::Cuts,
                Command::Verify,
            ]
        );
    }

    #[test]
    fn display_round_trips() {
        let s = "SWAP 8\nRELOC 1 4\nBATCH (1,5) (2,7)\nINSERT R 1 3\nDELETE 2\nCUTS";
        let text: Vec<String> = parse_script(s)
            .unwrap()
            .iter()
            .map(|c| c.to_string())
            .collect();
        assert_eq!(text.join("\n"), s);
    }

    #[test]
    fn bad_commands() {
        for s in [
            "SWAP",
            "SWAP 0",
            "RELOC 1",
            "BATCH 1 2 3",
            "JUMP 1",
            "CUTS 2",
            "INSERT RB 1",
        ] {
            assert!(
                matches!(parse_script(s), Err(CliError::Parse { .. })),
                "{s}"
            );
        }
    }

    #[test]
    fn empty_script() {
        assert!(parse_script("\n# nothing\n").unwrap().is_empty());
    }
}
