//! Telemetry persistence: a fixed-schema CSV with one row per control step,
//! printed with 17 significant digits so identical runs produce identical
//! bytes.

use std::io::{self, Write};

use crate::sim::StepRecord;

/// Column set and order of the telemetry CSV. Fixed; consumers may rely
/// on it.
pub const CSV_HEADER: &str = "t,x1,x2,x3,v1,v2,v3,xd1,xd2,xd3,ex_norm,ealpha_norm,\
ef1,ef2,ef3,f,M1,M2,M3,psi_R_Rd,psi_Rd_Rc,eomega_norm,g1_1,g1_2,g1_3,\
V2,V3,V4,V,e_norm_sq,bound_DlamV,viol_count";

/// Streams rows as the simulation produces them.
pub struct CsvWriter<W: Write> {
    out: W,
}

fn fmt(x: f64) -> String {
    // 17 significant digits round-trips every f64
    format!("{:.16e}", x)
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        writeln!(out, "{CSV_HEADER}")?;
        Ok(CsvWriter { out })
    }

    pub fn write_record(&mut self, rec: &StepRecord) -> io::Result<()> {
        let s = &rec.state;
        let cols: Vec<String> = [
            rec.t,
            s.position.x,
            s.position.y,
            s.position.z,
            s.velocity.x,
            s.velocity.y,
            s.velocity.z,
            rec.x_d.x,
            rec.x_d.y,
            rec.x_d.z,
            rec.e_x.norm(),
            rec.e_alpha.norm(),
            rec.e_f.x,
            rec.e_f.y,
            rec.e_f.z,
            rec.thrust,
            rec.moment.x,
            rec.moment.y,
            rec.moment.z,
            rec.errors.psi_r_rd,
            rec.errors.psi_rd_rc,
            rec.errors.e_omega_d.norm(),
            rec.g1.x,
            rec.g1.y,
            rec.g1.z,
            rec.lyapunov.v2,
            rec.lyapunov.v3,
            rec.lyapunov.v4,
            rec.lyapunov.v,
            rec.lyapunov.e_norm_sq,
            rec.ultimate_bound,
        ]
        .iter()
        .map(|&x| fmt(x))
        .collect();
        writeln!(self.out, "{},{}", cols.join(","), rec.violation_count)
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_has_32_columns() {
        assert_eq!(CSV_HEADER.split(',').count(), 32);
    }

    #[test]
    fn formatting_is_17_significant_digits() {
        assert_eq!(fmt(1.0), "1.0000000000000000e0");
        assert_eq!(fmt(0.1), "1.0000000000000001e-1");
        let x = std::f64::consts::PI;
        assert_eq!(fmt(x).parse::<f64>().unwrap(), x);
    }
}
