//! Sparse SDPA text format.
//!
//! An [`SdpProblem`] is written as the SDPA dual form
//! `max ⟨F0, Y⟩ s.t. ⟨Fi, Y⟩ = ci, Y ⪰ 0` with `ci = b_i`, `Fi = A_i` and
//! `F0 = −C`. Free scalars `u = u⁺ − u⁻` occupy a trailing diagonal block of
//! size `2n`, announced by a leading comment line `* free n` so that
//! [`read_sdpa`] can fold them back. Entries use 17 significant digits and
//! are listed in `(matrix, block, row, col)` order, duplicates summed.

use std::collections::BTreeMap;
use std::fmt::Write;

use ergobound_core::sdp::{Constraint, SdpProblem, SparseSym};

use super::{fmt17, parse_err, FormatError};

pub fn write_sdpa(p: &SdpProblem) -> String {
    let n = p.num_free;
    let mut out = String::new();
    if n > 0 {
        writeln!(out, "* free {}", n).unwrap();
    }
    writeln!(out, "{}", p.constraints.len()).unwrap();
    let nblocks = p.block_dims.len() + usize::from(n > 0);
    writeln!(out, "{}", nblocks).unwrap();
    let mut sizes: Vec<String> = p.block_dims.iter().map(|d| d.to_string()).collect();
    if n > 0 {
        sizes.push(format!("-{}", 2 * n));
    }
    writeln!(out, "{}", sizes.join(" ")).unwrap();
    let rhs: Vec<String> = p.constraints.iter().map(|c| fmt17(c.rhs)).collect();
    writeln!(out, "{}", rhs.join(" ")).unwrap();
    let free_block = p.block_dims.len() + 1;
    let mut entries: BTreeMap<(usize, usize, usize, usize), f64> = BTreeMap::new();
    let mut entry = |mat: usize, blk: usize, i: usize, j: usize, v: f64| {
        *entries.entry((mat, blk, i.min(j) + 1, i.max(j) + 1)).or_insert(0.0) += v;
    };
    for (k, c) in p.block_cost.iter().enumerate() {
        for &(i, j, v) in &c.entries {
            entry(0, k + 1, i, j, -v);
        }
    }
    for (j, &c) in p.free_cost.iter().enumerate() {
        entry(0, free_block, j, j, -c);
        entry(0, free_block, n + j, n + j, c);
    }
    for (row, c) in p.constraints.iter().enumerate() {
        for (k, a) in &c.blocks {
            for &(i, j, v) in &a.entries {
                entry(row + 1, k + 1, i, j, v);
            }
        }
        for &(j, v) in &c.free {
            entry(row + 1, free_block, j, j, v);
            entry(row + 1, free_block, n + j, n + j, -v);
        }
    }
    for ((mat, blk, i, j), v) in entries {
        if v != 0.0 {
            writeln!(out, "{} {} {} {} {}", mat, blk, i, j, fmt17(v)).unwrap();
        }
    }
    out
}

fn numbers(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c.is_whitespace() || c == ',' || c == '{' || c == '}' || c == '(' || c == ')')
        .filter(|s| !s.is_empty())
}

pub fn read_sdpa(text: &str) -> Result<SdpProblem, FormatError> {
    let mut free = 0usize;
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('*') || line.starts_with('"') {
            let mut f = line.trim_start_matches(['*', '"']).split_whitespace();
            if f.next() == Some("free") {
                free = f
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| parse_err(i + 1, "bad free count"))?;
            }
            continue;
        }
        lines.push((i + 1, line));
    }
    let mut it = lines.into_iter();
    let mut next = |what: &str| it.next().ok_or_else(|| parse_err(0, format!("missing {}", what)));
    let (ln, l) = next("constraint count")?;
    let m: usize = numbers(l).next().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err(ln, "bad constraint count"))?;
    let (ln, l) = next("block count")?;
    let nb: usize = numbers(l).next().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err(ln, "bad block count"))?;
    let (ln, l) = next("block sizes")?;
    let sizes: Vec<i64> = numbers(l).take(nb).map(|s| s.parse()).collect::<Result<_, _>>().map_err(|_| parse_err(ln, "bad block size"))?;
    if sizes.len() != nb || sizes.contains(&0) {
        return Err(parse_err(ln, "bad block sizes"));
    }
    let (ln, l) = next("right-hand side")?;
    let rhs: Vec<f64> = numbers(l).take(m).map(|s| s.parse()).collect::<Result<_, _>>().map_err(|_| parse_err(ln, "bad right-hand side"))?;
    if rhs.len() != m {
        return Err(parse_err(ln, "short right-hand side"));
    }
    let free_block = if free > 0 {
        if sizes.last() != Some(&-(2 * free as i64)) {
            return Err(FormatError::Invalid("free block must be the last, diagonal, of size 2n".into()));
        }
        Some(nb - 1)
    } else {
        None
    };
    let dims: Vec<usize> = sizes[..nb - usize::from(free > 0)].iter().map(|s| s.unsigned_abs() as usize).collect();
    let mut p = SdpProblem::new(dims.clone(), free);
    let mut blocks: Vec<Vec<BTreeMap<(usize, usize), f64>>> = vec![vec![BTreeMap::new(); dims.len()]; m + 1];
    let mut free_vals: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); m + 1];
    for (ln, l) in it {
        let f: Vec<&str> = numbers(l).collect();
        if f.len() != 5 {
            return Err(parse_err(ln, "expected `matrix block row col value`"));
        }
        let idx = |s: &str| s.parse::<usize>().map_err(|_| parse_err(ln, "bad index"));
        let (mat, blk, i, j) = (idx(f[0])?, idx(f[1])?, idx(f[2])?, idx(f[3])?);
        let v: f64 = f[4].parse().map_err(|_| parse_err(ln, "bad value"))?;
        if mat > m || blk == 0 || blk > nb || i == 0 || j == 0 {
            return Err(parse_err(ln, "index out of range"));
        }
        let size = sizes[blk - 1].unsigned_abs() as usize;
        if i > size || j > size || (sizes[blk - 1] < 0 && i != j) {
            return Err(parse_err(ln, "entry outside its block"));
        }
        let v = if mat == 0 { -v } else { v };
        if Some(blk - 1) == free_block {
            // the u⁻ half repeats the u⁺ half with the opposite sign
            if i <= free {
                *free_vals[mat].entry(i - 1).or_insert(0.0) += v;
            }
        } else {
            let (a, b) = (i.min(j) - 1, i.max(j) - 1);
            *blocks[mat][blk - 1].entry((a, b)).or_insert(0.0) += v;
        }
    }
    let to_sym = |m: &BTreeMap<(usize, usize), f64>| SparseSym {
        entries: m.iter().map(|(&(i, j), &v)| (i, j, v)).collect(),
    };
    for (k, b) in blocks[0].iter().enumerate() {
        p.block_cost[k] = to_sym(b);
    }
    for (&j, &v) in &free_vals[0] {
        p.free_cost[j] = v;
    }
    for row in 1..=m {
        p.constraints.push(Constraint {
            free: free_vals[row].iter().map(|(&j, &v)| (j, v)).collect(),
            blocks: blocks[row]
                .iter()
                .enumerate()
                .filter(|(_, b)| !b.is_empty())
                .map(|(k, b)| (k, to_sym(b)))
                .collect(),
            rhs: rhs[row - 1],
        });
    }
    Ok(p)
}
