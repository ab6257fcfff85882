use super::{Direction, GameState, BOARD_SIZE};

/// Fixed-order little-endian dump of a state.
///
/// Layout: grid row-major (one byte per cell kind), hidden items row-major
/// (0 none, 1 extra bomb, 2 range, 3 kick), bomb count u16 then per bomb
/// row, col, owner, countdown, blast strength, moving direction (0 none,
/// else the action code of the direction), flame count u16 then per flame
/// row, col, ttl, then the four agents by id (row, col, alive, ammo,
/// max bombs, blast strength, can kick, death step u16 with 0xFFFF for
/// none), then the step counter u16. Bombs and flames are stored sorted by
/// (row, col).
pub fn canonical_bytes(state: &GameState) -> Vec<u8> {
    let mut out = Vec::with_capacity(2 * BOARD_SIZE * BOARD_SIZE + 64);
    write_canonical(state, &mut out);
    out
}

fn write_canonical(state: &GameState, out: &mut Vec<u8>) {
    for row in &state.grid {
        out.extend(row.iter().map(|&c| c as u8));
    }
    for row in &state.hidden_items {
        out.extend(row.iter().map(|i| match i {
            None => 0u8,
            Some(super::Item::ExtraBomb) => 1,
            Some(super::Item::IncrRange) => 2,
            Some(super::Item::Kick) => 3,
        }));
    }
    out.extend_from_slice(&(state.bombs.len() as u16).to_le_bytes());
    for b in &state.bombs {
        out.extend_from_slice(&[
            b.pos.row,
            b.pos.col,
            b.owner as u8,
            b.countdown,
            b.blast_strength,
            b.moving_dir.map_or(0, Direction::code),
        ]);
    }
    out.extend_from_slice(&(state.flames.len() as u16).to_le_bytes());
    for f in &state.flames {
        out.extend_from_slice(&[f.pos.row, f.pos.col, f.ttl]);
    }
    for a in &state.agents {
        out.extend_from_slice(&[
            a.pos.row,
            a.pos.col,
            a.alive as u8,
            a.ammo,
            a.max_bombs,
            a.blast_strength,
            a.can_kick as u8,
        ]);
        out.extend_from_slice(&a.death_step.unwrap_or(u16::MAX).to_le_bytes());
    }
    out.extend_from_slice(&state.step_count.to_le_bytes());
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Final avalanche step of splitmix64.
pub(crate) fn fmix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// 64-bit FNV-1a over the canonical bytes, finished with an avalanche mix.
/// Stable across runs and platforms.
pub fn state_hash(state: &GameState) -> u64 {
    let mut buf = Vec::with_capacity(2 * BOARD_SIZE * BOARD_SIZE + 64);
    write_canonical(state, &mut buf);
    let mut h = FNV_OFFSET;
    for &byte in &buf {
        h ^= byte as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    fmix64(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{generate_board, Bomb, Position};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    #[test]
    fn copies_hash_equal() {
        let s = generate_board(11);
        assert_eq!(state_hash(&s), state_hash(&s.clone()));
    }

    #[test]
    fn hash_is_pinned() {
        // guards against accidental layout changes
        let s = crate::engine::GameState::empty();
        assert_eq!(canonical_bytes(&s).len(), 121 + 121 + 2 + 2 + 4 * 9 + 2);
        let h1 = state_hash(&s);
        let mut t = s.clone();
        t.step_count = 1;
        assert_ne!(h1, state_hash(&t));
    }

    #[test]
    fn countdown_perturbations_do_not_collide() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut seen = HashSet::new();
        let base = generate_board(1);
        let mut distinct = HashSet::new();
        for _ in 0..10_000 {
            let mut s = base.clone();
            let nb = rng.gen_range(1..6);
            for k in 0..nb {
                let pos = Position::new(rng.gen_range(0..11), rng.gen_range(0..11));
                if s.bomb_at(pos).is_none() {
                    s.insert_bomb(Bomb {
                        pos,
                        owner: k % 4,
                        countdown: rng.gen_range(1..=10),
                        blast_strength: 2,
                        moving_dir: None,
                    });
                }
            }
            let mut t = s.clone();
            let i = rng.gen_range(0..t.bombs.len());
            let old = t.bombs[i].countdown;
            t.bombs[i].countdown = if old == 10 { rng.gen_range(1..10) } else { old + 1 };
            assert_ne!(state_hash(&s), state_hash(&t));
            let bytes = canonical_bytes(&s);
            if distinct.insert(bytes) {
                assert!(seen.insert(state_hash(&s)), "hash collision");
            }
        }
        assert!(distinct.len() > 7_000, "{}", distinct.len());
    }

    #[test]
    fn single_countdown_change_changes_hash() {
        let mut s = generate_board(2);
        s.insert_bomb(Bomb {
            pos: Position::new(1, 1),
            owner: 0,
            countdown: 5,
            blast_strength: 2,
            moving_dir: None,
        });
        let mut t = s.clone();
        t.bombs[0].countdown = 4;
        assert_ne!(state_hash(&s), state_hash(&t));
    }
}
