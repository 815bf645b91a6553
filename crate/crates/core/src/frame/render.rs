//! Plain-text frame dump.
//!
//! ```text
//! frame SC=<rows> DL=<cols> SB=<subbands> SCSB=<rows per subband>
//! map columns=<c> slots=<s> ies=<n>
//! utility=<u> bytes=<b>
//! burst <letter> subband=<j> group=<g> columns=<first>..<end>
//!   ms=<u> mcs=<idx> bps=<bytes/slot> slots=<used> packets=<id,id,...>
//! grid
//! <one line per subchannel row: '#' MAP, letter = burst, '.' free>
//! ```

use std::fmt::Write as _;

use super::OfdmaFrame;

fn burst_letter(i: usize) -> char {
    const LETTERS: &[u8] = b"ABCDEFGHIJKLNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz";
    LETTERS[i % LETTERS.len()] as char
}

/// Owner of every slot: `None` free, `Some(None)` MAP, `Some(Some(i))` burst i.
pub fn slot_map(frame: &OfdmaFrame) -> Vec<Vec<Option<Option<usize>>>> {
    let g = &frame.geometry;
    let scsb = g.subchannels_per_subband();
    let mut grid = vec![vec![None; g.dl_columns]; g.subchannels];
    // MAP slots fill column by column from the left edge.
    for s in 0..frame.map.slots.min(g.frame_size_slots()) {
        grid[s % g.subchannels][s / g.subchannels] = Some(None);
    }
    for (i, b) in frame.bursts.iter().enumerate() {
        for row in grid.iter_mut().skip(b.subband * scsb).take(scsb) {
            for cell in row.iter_mut().skip(b.first_column).take(b.columns) {
                *cell = Some(Some(i));
            }
        }
    }
    grid
}

pub fn render_frame(frame: &OfdmaFrame) -> String {
    let g = &frame.geometry;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "frame SC={} DL={} SB={} SCSB={}",
        g.subchannels,
        g.dl_columns,
        g.subbands,
        g.subchannels_per_subband()
    );
    let _ = writeln!(
        out,
        "map columns={} slots={} ies={}",
        frame.map.columns, frame.map.slots, frame.map.ie_count
    );
    let _ = writeln!(out, "utility={:.6} bytes={}", frame.utility, frame.packed_bytes());
    for (i, b) in frame.bursts.iter().enumerate() {
        let r = b.column_range();
        let _ = writeln!(
            out,
            "burst {} subband={} group={} columns={}..{}",
            burst_letter(i),
            b.subband,
            b.group,
            r.start,
            r.end
        );
        for m in &b.members {
            let ids: Vec<String> = m.packets.iter().map(|p| p.to_string()).collect();
            let mcs = m.mcs.map_or("-".to_string(), |x| x.to_string());
            let _ = writeln!(
                out,
                "  ms={} mcs={} bps={} slots={} packets={}",
                m.ms,
                mcs,
                m.bytes_per_slot,
                m.slots_used,
                ids.join(",")
            );
        }
    }
    let _ = writeln!(out, "grid");
    for row in slot_map(frame) {
        let line: String = row
            .iter()
            .map(|c| match c {
                None => '.',
                Some(None) => '#',
                Some(Some(i)) => burst_letter(*i),
            })
            .collect();
        let _ = writeln!(out, "{line}");
    }
    out
}
