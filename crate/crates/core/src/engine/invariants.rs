//! Consistency checks for states and transitions.

use super::{Action, CellKind, GameState, Position, BOMB_FUSE, FLAME_TTL, MAX_STEPS, NUM_AGENTS};

/// Static rules every reachable state obeys.
pub fn check_state(s: &GameState) -> Result<(), String> {
    if s.step_count > MAX_STEPS {
        return Err(format!("step_count {} beyond the limit", s.step_count));
    }
    for (i, a) in s.agents.iter().enumerate() {
        let live = s.live_bombs_of(i);
        if a.ammo > a.max_bombs || a.ammo as usize + live != a.max_bombs as usize {
            return Err(format!(
                "agent {i}: ammo {} + {live} bombs != max_bombs {}",
                a.ammo, a.max_bombs
            ));
        }
        if a.blast_strength < 2 || a.max_bombs < 1 {
            return Err(format!("agent {i}: stats below their minimum"));
        }
        if !a.alive {
            continue;
        }
        if matches!(s.cell(a.pos), CellKind::Rigid | CellKind::Wood) {
            return Err(format!("agent {i} inside a wall at {:?}", a.pos));
        }
        if (0..i).any(|j| s.agents[j].alive && s.agents[j].pos == a.pos) {
            return Err(format!("agent {i} shares {:?}", a.pos));
        }
    }
    for (k, b) in s.bombs.iter().enumerate() {
        if !(1..=BOMB_FUSE).contains(&b.countdown) {
            return Err(format!("bomb at {:?} has countdown {}", b.pos, b.countdown));
        }
        if s.bombs[..k].iter().any(|o| o.pos == b.pos) {
            return Err(format!("two bombs at {:?}", b.pos));
        }
        if matches!(s.cell(b.pos), CellKind::Rigid | CellKind::Wood) {
            return Err(format!("bomb inside a wall at {:?}", b.pos));
        }
    }
    for (k, f) in s.flames.iter().enumerate() {
        if !(1..=FLAME_TTL).contains(&f.ttl) {
            return Err(format!("flame at {:?} has ttl {}", f.pos, f.ttl));
        }
        if s.flames[..k].iter().any(|o| o.pos == f.pos) {
            return Err(format!("two flames at {:?}", f.pos));
        }
    }
    for i in 0..11 * 11 {
        let p = Position::from_index(i);
        if s.hidden_item(p).is_some() && s.cell(p) != CellKind::Wood {
            return Err(format!("hidden item outside wood at {p:?}"));
        }
    }
    Ok(())
}

/// Rules linking a state to its successor under `actions`: the step
/// counter advances by one, fuses burn down by exactly one per step, bombs
/// never outlive their fuse, and flames live exactly two steps.
pub fn check_transition(prev: &GameState, actions: &[Action; NUM_AGENTS], next: &GameState) -> Result<(), String> {
    if next.step_count != prev.step_count + 1 {
        return Err("step counter did not advance by one".into());
    }
    for owner in 0..NUM_AGENTS {
        let mut before: Vec<u8> = prev.bombs.iter().filter(|b| b.owner == owner).map(|b| b.countdown).collect();
        for b in next.bombs.iter().filter(|b| b.owner == owner) {
            if b.countdown == BOMB_FUSE {
                let placed = prev.agents[owner].alive && actions[owner] == Action::PlaceBomb;
                if !placed {
                    return Err(format!("bomb of agent {owner} at {:?} appeared unplaced", b.pos));
                }
                continue;
            }
            match before.iter().position(|&c| c == b.countdown + 1) {
                Some(k) => {
                    before.swap_remove(k);
                }
                None => return Err(format!("bomb of agent {owner} at {:?} skipped a fuse tick", b.pos)),
            }
        }
        if next.bombs.iter().filter(|b| b.owner == owner && b.countdown == BOMB_FUSE).count() > 1 {
            return Err(format!("agent {owner} placed two bombs in one step"));
        }
    }
    for f in &next.flames {
        if f.ttl == 1 && prev.flame_at(f.pos).map(|o| o.ttl) != Some(FLAME_TTL) {
            return Err(format!("flame at {:?} aged without a predecessor", f.pos));
        }
    }
    for f in &prev.flames {
        if f.ttl == FLAME_TTL && next.flame_at(f.pos).is_none() {
            return Err(format!("flame at {:?} vanished after one step", f.pos));
        }
        if f.ttl == 1 && next.flame_at(f.pos).is_some_and(|n| n.ttl != FLAME_TTL) {
            return Err(format!("flame at {:?} outlived its ttl", f.pos));
        }
    }
    for (i, a) in prev.agents.iter().enumerate() {
        if !a.alive && next.agents[i].alive {
            return Err(format!("agent {i} came back to life"));
        }
    }
    check_state(next)
}
