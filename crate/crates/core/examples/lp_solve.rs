//! The bundled simplex on a small production-planning LP.

use stepsls::lp::{solve, LpProblem};

fn main() -> stepsls::Result<()> {
    // maximize 3x + 5y  s.t.  x <= 4, 2y <= 12, 3x + 2y <= 18, x, y >= 0
    let mut p = LpProblem::new(2);
    p.c = vec![-3.0, -5.0];
    p.add_le(vec![1.0, 0.0], 4.0);
    p.add_le(vec![0.0, 2.0], 12.0);
    p.add_le(vec![3.0, 2.0], 18.0);
    let s = solve(&p)?;
    println!("{:?}: x = {:?}, objective = {}", s.status, s.x, -s.objective);

    // a free variable and an equality
    let mut q = LpProblem::new(3);
    q.set_free(0);
    q.c = vec![1.0, 1.0, 1.0];
    q.add_eq(vec![1.0, -1.0, 0.0], -2.0);
    q.add_le(vec![-1.0, 0.0, -1.0], -1.0);
    let s = solve(&q)?;
    println!("{:?}: x = {:?}, objective = {}", s.status, s.x, s.objective);
    println!("max violation {:.1e}", q.max_violation(&s.x));

    let mut bad = LpProblem::new(1);
    bad.add_le(vec![1.0], -1.0);
    println!("{:?}", solve(&bad)?.status);
    Ok(())
}
