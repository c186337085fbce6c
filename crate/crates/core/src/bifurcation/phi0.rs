use crate::error::Result;
use crate::spectral::{grid_dims, pointwise_spectrum, x_nodes, NonlinearitySpec, SpectralField, Subspace, TrigPolynomial};

pub(crate) fn node_values(a: &TrigPolynomial, nx: usize) -> Vec<f64> {
    x_nodes(nx).into_iter().map(|x| a.eval(x)).collect()
}

/// `(∫_Ω c a(x) v^e h, Galerkin(c a v^e h))` with `h = 1` when absent.
pub(crate) fn power_terms(
    a: &TrigPolynomial,
    c: f64,
    v: &SpectralField,
    e: usize,
    h: Option<&SpectralField>,
    galerkin: bool,
) -> (f64, Option<SpectralField>) {
    let hl = h.map_or(0, |h| h.support_l());
    let t_deg = e * v.support_l() + hl;
    let x_deg = e * v.j_max() + h.map_or(0, |h| h.j_max()) + a.degree();
    let fields: Vec<&SpectralField> = match h {
        Some(h) => vec![v, h],
        None => vec![v],
    };
    let l_out = if galerkin { v.l_max() } else { 0 };
    let dims = grid_dims(&fields, t_deg, x_deg, l_out);
    let av = node_values(a, dims.1);
    let spectrum = pointwise_spectrum(&fields, dims, |b, u| {
        let w = if u.len() > 1 { u[1] } else { 1.0 };
        c * av[b] * u[0].powi(e as i32) * w
    });
    let g = galerkin.then(|| spectrum.galerkin(v.l_max(), v.j_max()));
    (spectrum.integral(), g)
}

/// Value and `L²(Ω)` gradient of `Φ0(v) = ||v||²_{H¹}/2 - ∫ s* a_p v^{p+1}/(p+1)` on `V`.
pub fn phi0(v: &SpectralField, spec: &NonlinearitySpec) -> Result<(f64, SpectralField)> {
    let p = spec.p;
    let lap = v.neg_laplacian();
    let (int, _) = power_terms(spec.leading(), spec.s_star, v, p + 1, None, false);
    let value = 0.5 * lap.l2_dot(v) - int / (p + 1) as f64;
    let (_, g) = power_terms(spec.leading(), spec.s_star, v, p, None, true);
    let grad = lap.sub(&g.expect("galerkin requested")).project(Subspace::V);
    Ok((value, grad))
}

/// `h ↦ -Δh - Π_V(p s* a_p v^{p-1} h)`.
pub fn phi0_hessian_action(v: &SpectralField, h: &SpectralField, spec: &NonlinearitySpec) -> SpectralField {
    let p = spec.p;
    let (_, g) = power_terms(spec.leading(), spec.s_star * p as f64, v, p - 1, Some(h), true);
    h.neg_laplacian().sub(&g.expect("galerkin requested")).project(Subspace::V)
}

/// `H_n`: moves the V-coefficient at `(l, |l|)` to `(nl, n|l|)`.
pub fn embed_hn(v: &SpectralField, n: usize) -> Result<SpectralField> {
    let top = v.support_l();
    if n * top > v.l_max().min(v.j_max()) {
        return Err(crate::Error::TruncationOverflow {
            required: n * top,
            available: v.l_max().min(v.j_max()),
        });
    }
    let mut out = SpectralField::zeros(v.l_max(), v.j_max());
    for l in 1..=top as i64 {
        let c = v.get(l, l as usize);
        out.set(n as i64 * l, n * l as usize, c);
    }
    Ok(out)
}
