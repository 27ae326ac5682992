//! CSV emission of step reports and halving events.

use std::io::{self, Write};

use super::{Algorithm, CflCondition, HalvingEvent, StepReport};

/// Margin columns written for a run of `algorithm`: its own conditions plus
/// those of its startup partner.
pub fn margin_columns(algorithm: Algorithm) -> Vec<CflCondition> {
    let mut cols: Vec<CflCondition> = CflCondition::active(algorithm.first_order_partner()).to_vec();
    for &c in CflCondition::active(algorithm) {
        if !cols.contains(&c) {
            cols.push(c);
        }
    }
    cols
}

/// One row per step and member. Margin cells of conditions not checked in a
/// step are left empty.
pub fn write_step_csv(out: &mut impl Write, algorithm: Algorithm, reports: &[StepReport]) -> io::Result<()> {
    let cols = margin_columns(algorithm);
    writeln!(
        out,
        "# step: accepted steps after the row's step; t, dt: time units; energy: discrete energy \
         of the member (velocity^2 x area); margin_*: dimensionless left-hand side of a timestep \
         condition (<= 1 certifies the step); flux: open-boundary dissipation F (velocity^3 x length)"
    )?;
    write!(out, "step,t,dt,scheme,member,energy")?;
    for c in &cols {
        write!(out, ",margin_{}", c.name())?;
    }
    writeln!(out, ",flux")?;
    for r in reports {
        for (j, m) in r.members.iter().enumerate() {
            write!(out, "{},{:.12e},{:.12e},{},{},{:.12e}", r.step, r.t, r.dt, r.scheme, j, m.energy)?;
            for c in &cols {
                match m.margins.iter().find(|x| x.0 == *c) {
                    Some((_, v)) => write!(out, ",{v:.12e}")?,
                    None => write!(out, ",")?,
                }
            }
            writeln!(out, ",{:.12e}", m.flux)?;
        }
    }
    Ok(())
}

pub fn write_halving_csv(out: &mut impl Write, events: &[HalvingEvent]) -> io::Result<()> {
    writeln!(
        out,
        "# halving events: step = accepted steps before the halving; t, old_dt, new_dt in time units; \
         worst_margin = largest scaled margin that triggered it"
    )?;
    writeln!(out, "step,t,old_dt,new_dt,worst_margin")?;
    for e in events {
        writeln!(
            out,
            "{},{:.12e},{:.12e},{:.12e},{:.12e}",
            e.step, e.t, e.old_dt, e.new_dt, e.worst_margin
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::MemberReport;
    use crate::linsolve::CounterSnapshot;

    #[test]
    fn columns_include_startup_conditions() {
        let c = margin_columns(Algorithm::A5);
        assert_eq!(
            c,
            vec![
                CflCondition::OpenDivergence,
                CflCondition::OpenBackflow,
                CflCondition::OpenDivergence2,
                CflCondition::OpenBackflow2
            ]
        );
        assert!(margin_columns(Algorithm::Baseline).is_empty());
    }

    #[test]
    fn csv_layout() {
        let r = StepReport {
            step: 1,
            t: 0.1,
            dt: 0.1,
            scheme: Algorithm::A1,
            members: vec![MemberReport {
                energy_before: 1.0,
                energy: 0.5,
                flux: 0.0,
                ledger_bound: 0.0,
                margins: vec![(CflCondition::Dirichlet, 0.25)],
            }],
            counters: CounterSnapshot::default(),
            halvings: vec![],
            matrix_fingerprint: 0,
        };
        let mut buf = Vec::new();
        write_step_csv(&mut buf, Algorithm::A4, &[r]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert!(lines[0].starts_with('#'));
        assert_eq!(lines[1], "step,t,dt,scheme,member,energy,margin_stab,margin_stab_2nd,flux");
        assert!(lines[2].starts_with("1,1.000000000000e-1,1.000000000000e-1,A1,0,5.000000000000e-1,2.500000000000e-1,,"));
        let mut buf = Vec::new();
        write_halving_csv(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
    }
}
