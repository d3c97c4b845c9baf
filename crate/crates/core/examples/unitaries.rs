//! The clock-and-shift unitaries U_m: unitarity, the shift relation and
//! their Lipschitz constants against both forms of the bound.
use bdqm::periodic_matfun::{
    intertwining_residual, make_shift_v, make_unitary_u, unitarity_residual, unitary_lip_bound, GridParams,
};

fn main() {
    let gp = GridParams::default();
    println!("{:>2} {:>10} {:>10} {:>14} {:>14} {:>10}", "m", "unitary", "shift", "l(U_m)", "bound", "no 2pi");
    for m in 2..=8 {
        let u = make_unitary_u(m);
        let v = make_shift_v(m);
        println!(
            "{:>2} {:>10.1e} {:>10.1e} {:>14.10} {:>14.10} {:>10.6}",
            m,
            unitarity_residual(&u, 64),
            intertwining_residual(&u, &v, 64),
            u.lipschitz_seminorm(&gp),
            unitary_lip_bound(m, true),
            unitary_lip_bound(m, false),
        );
    }
}
