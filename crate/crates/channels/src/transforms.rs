use crate::error::{ChannelError, Result};
use crate::kraus::{KrausMap, KrausOperator};
use crate::potential::{check_ladder_condition, nonequilibrium_potential};
use crate::{TOL_CPTP, TOL_FIX};
use qtherm_core::{eig_hermitian, max_abs, CMatrix, DensityOperator, TimeReversal, C64};

/// `max |E(ρ) - ρ|`.
pub fn invariance_residual(map: &KrausMap, rho: &CMatrix) -> f64 {
    max_abs(&(map.apply_matrix(rho) - rho))
}

/// `M̃ = exp(-σ^E/2) Θ M^dag Θ^dag`; the backward operator keeps the
/// forward label, with `σ^E` and `Δφ` negated.
pub fn backward_map(map: &KrausMap, theta: TimeReversal) -> Result<KrausMap> {
    let mut ops = Vec::with_capacity(map.len());
    for (i, op) in map.ops().iter().enumerate() {
        let s = op.sigma_e.ok_or(ChannelError::MissingSigmaE(i))?;
        let m = theta.apply(&op.matrix.adjoint()) * C64::new((-s / 2.0).exp(), 0.0);
        ops.push(KrausOperator {
            matrix: m,
            label: op.label,
            sigma_e: Some(-s),
            dphi: op.dphi.map(|d| -d),
        });
    }
    KrausMap::new(ops).map_err(|e| match e {
        ChannelError::NotComplete(r) => ChannelError::InconsistentEntropies(r),
        other => other,
    })
}

fn check_invariant(map: &KrausMap, pi: &DensityOperator) -> Result<()> {
    let r = invariance_residual(map, pi.matrix());
    if r > TOL_FIX {
        return Err(ChannelError::NotInvariant(r));
    }
    Ok(())
}

/// `D̃ = Θ π^{1/2} M^dag π^{-1/2} Θ^dag`.
pub fn dual_reverse_map(map: &KrausMap, pi: &DensityOperator, theta: TimeReversal) -> Result<KrausMap> {
    check_invariant(map, pi)?;
    let eig = eig_hermitian(pi.matrix())?;
    let min = eig.values[0];
    if min <= crate::PD_FLOOR {
        return Err(ChannelError::NotPositiveDefinite(min));
    }
    let sqrt = eig.map(|l| C64::new(l.sqrt(), 0.0));
    let isqrt = eig.map(|l| C64::new(1.0 / l.sqrt(), 0.0));
    let ops = map
        .ops()
        .iter()
        .map(|op| KrausOperator {
            matrix: theta.apply(&(&sqrt * op.matrix.adjoint() * &isqrt)),
            label: op.label,
            sigma_e: None,
            dphi: op.dphi.map(|d| -d),
        })
        .collect();
    let out = KrausMap::new(ops)?;
    let pt = theta.apply(pi.matrix());
    let r = invariance_residual(&out, &pt);
    if r > TOL_FIX {
        return Err(ChannelError::NotInvariant(r));
    }
    Ok(out)
}

/// `D = exp(-(σ^E + Δφ)/2) M`.
///
/// Requires the ladder condition and that the backward map leaves `Θ π Θ^dag`
/// invariant; both are verified.
pub fn dual_map(map: &KrausMap, pi: &DensityOperator, theta: TimeReversal) -> Result<KrausMap> {
    check_invariant(map, pi)?;
    let phi = nonequilibrium_potential(pi)?;
    let report = check_ladder_condition(map, &phi);
    let annotated = report.annotate(map)?;
    let back = backward_map(&annotated, theta)?;
    let r = invariance_residual(&back, &theta.apply(pi.matrix()));
    if r > TOL_FIX {
        return Err(ChannelError::BackwardNotInvariant(r));
    }
    let ops = annotated
        .ops()
        .iter()
        .enumerate()
        .map(|(i, op)| {
            let s = op.sigma_e.ok_or(ChannelError::MissingSigmaE(i))?;
            let d = op.dphi.ok_or(ChannelError::MissingDphi(i))?;
            Ok(KrausOperator {
                matrix: &op.matrix * C64::new((-(s + d) / 2.0).exp(), 0.0),
                label: op.label,
                sigma_e: Some(s),
                dphi: Some(d),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let out = KrausMap::new_unchecked(ops)?;
    let c = out.completeness_residual();
    if c > TOL_CPTP {
        return Err(ChannelError::NotComplete(c));
    }
    Ok(out)
}
