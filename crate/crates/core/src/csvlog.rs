//! CSV persistence of the simulation log. The header is fixed and every
//! number is written with 17 significant digits, so parsing an emitted file
//! reproduces the records exactly.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::simulator::LogRecord;

pub const HEADER: &str = "t,x,y,z,theta,psi,x_ref,y_ref,z_ref,ex,ey,ez,u0,u1,u2,beta,\
eta1,eta2,eta3,eta4,eta5,eta6,ehat11,ehat12,ehat13,ehat14,sigma1,ehat21,ehat22,ehat23,ehat24,sigma2,env_ok";

const NUMERIC_COLUMNS: usize = 32;

fn values(r: &LogRecord) -> [f64; NUMERIC_COLUMNS] {
    let mut v = [0.0; NUMERIC_COLUMNS];
    let head = [
        r.t, r.x, r.y, r.z, r.theta, r.psi, r.x_ref, r.y_ref, r.z_ref, r.ex, r.ey, r.ez, r.u0, r.u1, r.u2,
        r.beta,
    ];
    v[..16].copy_from_slice(&head);
    v[16..22].copy_from_slice(&r.eta);
    v[22..26].copy_from_slice(&r.ehat1);
    v[26] = r.sigma1;
    v[27..31].copy_from_slice(&r.ehat2);
    v[31] = r.sigma2;
    v
}

fn record(v: &[f64; NUMERIC_COLUMNS], env_ok: bool) -> LogRecord {
    let arr = |a: usize, b: usize| -> Vec<f64> { v[a..b].to_vec() };
    LogRecord {
        t: v[0],
        x: v[1],
        y: v[2],
        z: v[3],
        theta: v[4],
        psi: v[5],
        x_ref: v[6],
        y_ref: v[7],
        z_ref: v[8],
        ex: v[9],
        ey: v[10],
        ez: v[11],
        u0: v[12],
        u1: v[13],
        u2: v[14],
        beta: v[15],
        eta: arr(16, 22).try_into().expect("6 values"),
        ehat1: arr(22, 26).try_into().expect("4 values"),
        sigma1: v[26],
        ehat2: arr(27, 31).try_into().expect("4 values"),
        sigma2: v[31],
        env_ok,
    }
}

pub fn write_csv(log: &[LogRecord]) -> String {
    let mut s = String::with_capacity((log.len() + 1) * 32 * 24);
    s.push_str(HEADER);
    s.push('\n');
    for r in log {
        for v in values(r) {
            let _ = write!(s, "{v:.16e},");
        }
        s.push(if r.env_ok { '1' } else { '0' });
        s.push('\n');
    }
    s
}

pub fn parse_csv(text: &str) -> Result<Vec<LogRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == HEADER => {}
        Some(h) => return Err(Error::Log(format!("unexpected header `{h}`"))),
        None => return Err(Error::Log("empty file".into())),
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != NUMERIC_COLUMNS + 1 {
            return Err(Error::Log(format!(
                "line {row}: expected {} fields, got {}",
                NUMERIC_COLUMNS + 1,
                fields.len()
            )));
        }
        let mut v = [0.0; NUMERIC_COLUMNS];
        for (j, (slot, f)) in v.iter_mut().zip(&fields).enumerate() {
            *slot = f
                .parse()
                .map_err(|_| Error::Log(format!("line {row}, column {}: `{f}` is not a number", j + 1)))?;
        }
        let env_ok = match fields[NUMERIC_COLUMNS] {
            "1" => true,
            "0" => false,
            other => return Err(Error::Log(format!("line {row}: env_ok must be 0 or 1, got `{other}`"))),
        };
        out.push(record(&v, env_ok));
    }
    Ok(out)
}
