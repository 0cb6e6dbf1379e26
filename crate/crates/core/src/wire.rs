//! JSON records for fields, ideals, CM types, type quadruples, lattice models and curves.

use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::cm::{cm_check, CMType};
use crate::error::{Error, Result};
use crate::ideal::{FracIdeal, PrimeIdeal};
use crate::latticeav::LatticeAV;
use crate::nf::{NfElem, NumberField};
use crate::order::Order;
use crate::polar::TypeQuadruple;
use crate::stverify::{CMCurveQ, CmEndo};
use crate::{QPoly, Rational};

/// An integer or rational written as a JSON number or a "p/q" string.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Int(i64),
    Str(String),
}

impl Num {
    pub fn rational(&self) -> Result<Rational> {
        match self {
            Num::Int(n) => Ok(Rational::from_integer(BigInt::from(*n))),
            Num::Str(s) => {
                let s = s.trim();
                if s.contains('/') {
                    Rational::from_str(s).map_err(|_| Error::InvalidInput(format!("bad rational {s:?}")))
                } else {
                    BigInt::from_str(s)
                        .map(Rational::from_integer)
                        .map_err(|_| Error::InvalidInput(format!("bad integer {s:?}")))
                }
            }
        }
    }

    pub fn integer(&self) -> Result<BigInt> {
        let q = self.rational()?;
        if !q.is_integer() {
            return Err(Error::InvalidInput(format!("{q} is not an integer")));
        }
        Ok(q.to_integer())
    }

    pub fn from_rational(q: &Rational) -> Num {
        if q.is_integer() {
            Num::from_int(&q.to_integer())
        } else {
            Num::Str(q.to_string())
        }
    }

    pub fn from_int(n: &BigInt) -> Num {
        match n.to_i64() {
            Some(v) => Num::Int(v),
            None => Num::Str(n.to_string()),
        }
    }
}

fn rationals(v: &[Num]) -> Result<Vec<Rational>> {
    v.iter().map(Num::rational).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldWire {
    pub min_poly: Vec<Num>,
}

impl FieldWire {
    pub fn field(&self) -> Result<NumberField> {
        let c = rationals(&self.min_poly)?;
        if c.len() < 2 {
            return Err(Error::InvalidInput("minimal polynomial must have degree at least 1".into()));
        }
        NumberField::new(&QPoly::new(c))
    }

    pub fn from_field(k: &NumberField) -> FieldWire {
        FieldWire { min_poly: k.min_poly().coeffs().iter().map(Num::from_rational).collect() }
    }
}

/// Power-basis coordinates.
pub fn elem_from_wire(k: &NumberField, c: &[Num]) -> Result<NfElem> {
    let mut v = rationals(c)?;
    if v.len() > k.degree() {
        return Err(Error::InvalidInput(format!("element has {} coordinates in a degree {} field", v.len(), k.degree())));
    }
    v.resize(k.degree(), Rational::from_integer(BigInt::from(0)));
    Ok(k.elem(v))
}

pub fn elem_to_wire(a: &NfElem) -> Vec<Num> {
    a.coords().iter().map(Num::from_rational).collect()
}

/// {"den": d, "hnf": [[column], ...]} on the integral basis of the maximal order; prime
/// ideals carry p, e and f.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdealWire {
    pub den: Num,
    pub hnf: Vec<Vec<Num>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub e: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub f: Option<u32>,
}

impl IdealWire {
    pub fn from_ideal(a: &FracIdeal) -> IdealWire {
        IdealWire {
            den: Num::from_int(a.den()),
            hnf: a.hnf().iter().map(|c| c.iter().map(Num::from_int).collect()).collect(),
            p: None,
            e: None,
            f: None,
        }
    }

    pub fn from_prime(p: &PrimeIdeal) -> IdealWire {
        IdealWire { p: Some(Num::from_int(&p.p)), e: Some(p.e), f: Some(p.f), ..Self::from_ideal(&p.ideal) }
    }

    pub fn ideal(&self, order: &Order) -> Result<FracIdeal> {
        let den = self.den.integer()?;
        let cols: Vec<Vec<BigInt>> =
            self.hnf.iter().map(|c| c.iter().map(Num::integer).collect::<Result<_>>()).collect::<Result<_>>()?;
        if cols.len() != order.degree() || cols.iter().any(|c| c.len() != order.degree()) {
            return Err(Error::InvalidInput("ideal basis has the wrong shape".into()));
        }
        let a = FracIdeal::from_parts(order, den, cols)?;
        if let Some(p) = &self.p {
            let pr = PrimeIdeal::from_ideal(&a)?;
            if pr.p != p.integer()? || self.e.map_or(false, |e| e != pr.e) || self.f.map_or(false, |f| f != pr.f) {
                return Err(Error::InvalidInput("prime ideal data does not match the ideal".into()));
            }
        }
        Ok(a)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CMTypeWire {
    pub field: FieldWire,
    pub phi: Vec<usize>,
}

impl CMTypeWire {
    pub fn cm_type(&self) -> Result<CMType> {
        let k = self.field.field()?;
        let cm = Arc::new(cm_check(&k).ok_or(Error::NotCM)?);
        CMType::new(cm, self.phi.clone())
    }

    pub fn from_type(t: &CMType) -> CMTypeWire {
        CMTypeWire { field: FieldWire::from_field(t.field()), phi: t.phi.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadrupleWire {
    pub cmtype: CMTypeWire,
    pub ideal: IdealWire,
    pub t: Vec<Num>,
}

impl QuadrupleWire {
    pub fn quadruple(&self) -> Result<TypeQuadruple> {
        let cm_type = self.cmtype.cm_type()?;
        let o = Order::maximal(cm_type.field());
        let ideal = self.ideal.ideal(&o)?;
        let t = elem_from_wire(cm_type.field(), &self.t)?;
        Ok(TypeQuadruple { cm_type, ideal, t })
    }

    pub fn from_quadruple(q: &TypeQuadruple) -> QuadrupleWire {
        QuadrupleWire {
            cmtype: CMTypeWire::from_type(&q.cm_type),
            ideal: IdealWire::from_ideal(&q.ideal),
            t: elem_to_wire(&q.t),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeAVWire {
    pub cmtype: CMTypeWire,
    pub lattice: IdealWire,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ideal: Option<IdealWire>,
}

impl LatticeAVWire {
    pub fn lattice_av(&self) -> Result<LatticeAV> {
        let t = self.cmtype.cm_type()?;
        let o = Order::maximal(t.field());
        let l = self.lattice.ideal(&o)?;
        LatticeAV::new(&t, l)
    }

    pub fn from_lattice_av(a: &LatticeAV) -> LatticeAVWire {
        LatticeAVWire { cmtype: CMTypeWire::from_type(&a.cm_type), lattice: IdealWire::from_ideal(&a.lattice), ideal: None }
    }
}

/// [gamma](x, y) = (x_scale x, y_scale y), everything in power-basis coordinates of E.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CmEndoWire {
    pub gamma: Vec<Num>,
    pub x_scale: Vec<Num>,
    pub y_scale: Vec<Num>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveWire {
    pub name: String,
    pub a4: i64,
    pub a6: i64,
    pub cm_disc: i64,
    pub field: FieldWire,
    pub cm_endo: CmEndoWire,
}

impl CurveWire {
    pub fn curve(&self) -> Result<CMCurveQ> {
        let e = self.field.field()?;
        let o = Order::maximal(&e);
        if o.disc() != &BigInt::from(self.cm_disc) {
            return Err(Error::InvalidInput(format!("cm_disc {} does not match disc {}", self.cm_disc, o.disc())));
        }
        let endo = CmEndo {
            gamma: elem_from_wire(&e, &self.cm_endo.gamma)?,
            x_scale: elem_from_wire(&e, &self.cm_endo.x_scale)?,
            y_scale: elem_from_wire(&e, &self.cm_endo.y_scale)?,
        };
        CMCurveQ::new(&self.name, self.a4, self.a6, endo)
    }

    pub fn from_curve(c: &CMCurveQ) -> CurveWire {
        CurveWire {
            name: c.name.clone(),
            a4: c.a4,
            a6: c.a6,
            cm_disc: Order::maximal(c.field()).disc().to_i64().expect("small discriminant"),
            field: FieldWire::from_field(c.field()),
            cm_endo: CmEndoWire {
                gamma: elem_to_wire(&c.endo.gamma),
                x_scale: elem_to_wire(&c.endo.x_scale),
                y_scale: elem_to_wire(&c.endo.y_scale),
            },
        }
    }
}

/// A corpus file: a JSON array of records, or one record per line.
pub fn parse_records<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>> {
    let t = text.trim_start();
    if t.starts_with('[') {
        return serde_json::from_str(t).map_err(|e| Error::InvalidInput(e.to_string()));
    }
    t.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| Error::InvalidInput(e.to_string())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        let f: FieldWire = serde_json::from_str(r#"{"min_poly": [3, 0, "6", 0, 1]}"#).unwrap();
        let k = f.field().unwrap();
        assert_eq!(FieldWire::from_field(&k), FieldWire { min_poly: [3, 0, 6, 0, 1].map(Num::Int).to_vec() });
        let g: FieldWire = serde_json::from_str(r#"{"min_poly": ["1/4", 0, 1]}"#).unwrap();
        assert_eq!(g.field().unwrap().degree(), 2);
        let o = Order::maximal(&k);
        let a = FracIdeal::from_gens(&o, &[k.from_int(3), k.elem_ints(&[1, 1, 0, 0])]).unwrap().pow(-1).unwrap();
        let w = IdealWire::from_ideal(&a);
        let s = serde_json::to_string(&w).unwrap();
        let back: IdealWire = serde_json::from_str(&s).unwrap();
        assert_eq!(back.ideal(&o).unwrap(), a);
        let c = CMCurveQ::x3_plus_1();
        let cw = CurveWire::from_curve(&c);
        assert_eq!(cw.cm_disc, -3);
        let again: CurveWire = serde_json::from_str(&serde_json::to_string(&cw).unwrap()).unwrap();
        assert_eq!(again.curve().unwrap().endo.gamma, c.endo.gamma);
    }
}
