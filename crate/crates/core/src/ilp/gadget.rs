use super::{IlpError, IlpModel, LinExpr, Sense, VarId, VarKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoolOp {
    And,
    Or,
    Not,
}

impl IlpModel {
    fn require_binary(&self, v: VarId) -> Result<(), IlpError> {
        if v.index() >= self.num_vars() {
            return Err(IlpError::UnknownVariable(v.0));
        }
        if self.var(v).kind != VarKind::Binary {
            return Err(IlpError::NotBinary(self.var(v).name.clone()));
        }
        Ok(())
    }

    /// Fresh binary equal to `op(inputs)`. `Not` uses the first input only.
    pub fn bool_gadget(&mut self, op: BoolOp, inputs: &[VarId]) -> Result<VarId, IlpError> {
        if inputs.is_empty() {
            return Err(IlpError::EmptyGadget);
        }
        for &v in inputs {
            self.require_binary(v)?;
        }
        let name = match op {
            BoolOp::And => "and",
            BoolOp::Or => "or",
            BoolOp::Not => "not",
        };
        let z = self.binary(format!("{name}_{}", self.num_vars()));
        self.bool_gadget_into(op, z, inputs);
        Ok(z)
    }

    /// Adds the gadget constraints forcing the existing binary `z`.
    pub(crate) fn bool_gadget_into(&mut self, op: BoolOp, z: VarId, inputs: &[VarId]) {
        match op {
            BoolOp::Not => {
                self.constrain(LinExpr::var(z).with_term(inputs[0], 1.0), Sense::Eq, 1.0);
            }
            BoolOp::And => {
                for &x in inputs {
                    self.constrain(LinExpr::var(z).with_term(x, -1.0), Sense::Le, 0.0);
                }
                let mut e = LinExpr::var(z);
                for &x in inputs {
                    e.add_term(x, -1.0);
                }
                self.constrain(e, Sense::Ge, 1.0 - inputs.len() as f64);
            }
            BoolOp::Or => {
                for &x in inputs {
                    self.constrain(LinExpr::var(z).with_term(x, -1.0), Sense::Ge, 0.0);
                }
                let mut e = LinExpr::var(z);
                for &x in inputs {
                    e.add_term(x, -1.0);
                }
                self.constrain(e, Sense::Le, 0.0);
            }
        }
    }

    /// Fresh binary `y` with `y = 1 ⇔ expr ≥ m`, using the pair
    /// `expr − M·y ≤ m − 1` and `expr − M·y ≥ m − M`.
    pub fn indicator_geq(&mut self, expr: &LinExpr, m: i64, big_m: f64) -> Result<VarId, IlpError> {
        for (v, _) in expr.terms() {
            if v.index() >= self.num_vars() {
                return Err(IlpError::UnknownVariable(v.0));
            }
        }
        if !self.is_integral_expr(expr) {
            return Err(IlpError::NotIntegral);
        }
        let (lo, hi) = self.expr_bounds(expr);
        let needed = (hi - m as f64 + 1.0).max(m as f64 - lo);
        if big_m < needed {
            return Err(IlpError::BigMTooSmall { big_m, needed });
        }
        let y = self.binary(format!("ind_{}", self.num_vars()));
        self.indicator_into(y, expr, m, big_m);
        Ok(y)
    }

    pub(crate) fn indicator_into(&mut self, y: VarId, expr: &LinExpr, m: i64, big_m: f64) {
        let e = expr.clone().with_term(y, -big_m);
        self.constrain(e.clone(), Sense::Le, m as f64 - 1.0);
        self.constrain(e, Sense::Ge, m as f64 - big_m);
    }
}
