//! Census of contraction graphs by class, with every position on the
//! time-ordered side.

use boltzgraph::graphs::{classify, count, enumerate};

fn main() -> boltzgraph::Result<()> {
    println!("r nbar  total  disc  2conn  simple  crossing  nesting");
    for (r, n_bar) in [(1, 4), (2, 2), (2, 4), (3, 2), (4, 2), (2, 6), (1, 8)] {
        let (mut disc, mut two, mut simple, mut cross, mut nest) = (0, 0, 0, 0, 0);
        for g in enumerate(r, n_bar, n_bar)? {
            let c = classify(&g);
            disc += c.is_disconnected as usize;
            two += c.is_two_connected as usize;
            simple += c.is_simple() as usize;
            cross += c.has_crossing() as usize;
            nest += c.has_nesting() as usize;
        }
        println!("{r} {n_bar:>4} {:>6} {disc:>5} {two:>6} {simple:>7} {cross:>9} {nest:>8}", count(r, n_bar)?);
    }
    Ok(())
}
