//! Certify the built-in tetrahedral rules and print their tightness.

use edgefem::quadrature::{keast_degree4, tensorized_gl, verify_exactness, worst_at_degree, BuiltinRule};

fn main() -> edgefem::error::Result<()> {
    for b in BuiltinRule::ALL {
        let rule = b.build()?;
        let d = b.declared_degree();
        let above = worst_at_degree(&rule, d + 1);
        println!(
            "{:<14} {:>2} points  degree {}  exact={}  worst relative error at {}: {:.2e}",
            rule.label(),
            rule.len(),
            d,
            verify_exactness(&rule, d).exact,
            d + 1,
            above.rel_error
        );
    }
    let k11 = keast_degree4();
    println!("{:<14} {:>2} points  degree {:?}", k11.label(), k11.len(), k11.exactness_degree());
    for n in 1..=5 {
        let r = tensorized_gl(n);
        println!("{:<14} {:>3} points  degree {:?}", r.label(), r.len(), r.exactness_degree());
    }
    Ok(())
}
