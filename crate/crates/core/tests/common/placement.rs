//! Exhaustive integer placement for containers of at most 4x4x4 cells.

/// Occupancy of a container of at most 4x4x4 cells as a bitmask.
fn cell(x: u32, y: u32, z: u32) -> u64 {
    1 << (x * 16 + y * 4 + z)
}

fn block(at: [u32; 3], size: [u32; 3]) -> u64 {
    let mut m = 0;
    for x in at[0]..at[0] + size[0] {
        for y in at[1]..at[1] + size[1] {
            for z in at[2]..at[2] + size[2] {
                m |= cell(x, y, z);
            }
        }
    }
    m
}

fn rotations(d: [u32; 3]) -> Vec<[u32; 3]> {
    let [a, b, c] = d;
    vec![[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]
}

/// Tries every integer position and rotation of every item.
pub fn brute(items: &[[u32; 3]], c: [u32; 3], used: u64) -> bool {
    let Some((first, rest)) = items.split_first() else {
        return true;
    };
    for r in rotations(*first) {
        if (0..3).any(|d| r[d] > c[d]) {
            continue;
        }
        for x in 0..=c[0] - r[0] {
            for y in 0..=c[1] - r[1] {
                for z in 0..=c[2] - r[2] {
                    let m = block([x, y, z], r);
                    if m & used == 0 && brute(rest, c, used | m) {
                        return true;
                    }
                }
            }
        }
    }
    false
}
