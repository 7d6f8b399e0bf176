use super::{Expr, Func, Node};

pub(super) fn derivative(e: &Expr, var: &str) -> Expr {
    if !e.depends_on(var) {
        return Expr::zero();
    }
    match e.node() {
        Node::Num(_) => Expr::zero(),
        Node::Var(v) => {
            if &**v == var {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Add(a, b) => Expr::add(derivative(a, var), derivative(b, var)),
        Node::Sub(a, b) => Expr::sub(derivative(a, var), derivative(b, var)),
        Node::Mul(a, b) => Expr::add(
            Expr::mul(derivative(a, var), b.clone()),
            Expr::mul(a.clone(), derivative(b, var)),
        ),
        Node::Div(a, b) => {
            let da = derivative(a, var);
            let db = derivative(b, var);
            if db.is_zero() {
                Expr::div(da, b.clone())
            } else {
                Expr::div(
                    Expr::sub(Expr::mul(da, b.clone()), Expr::mul(a.clone(), db)),
                    Expr::powi(b.clone(), 2),
                )
            }
        }
        Node::Pow(a, n) => Expr::mul(
            Expr::mul(Expr::num(*n as f64), Expr::powi(a.clone(), n - 1)),
            derivative(a, var),
        ),
        Node::Neg(a) => Expr::neg(derivative(a, var)),
        Node::Call(f, a) => {
            let outer = match f {
                Func::Sin => Expr::cos(a.clone()),
                Func::Cos => Expr::neg(Expr::sin(a.clone())),
                Func::Sinh => Expr::call(Func::Cosh, a.clone()),
                Func::Cosh => Expr::call(Func::Sinh, a.clone()),
                Func::Exp => e.clone(),
                Func::Log => Expr::div(Expr::one(), a.clone()),
                Func::Sqrt => Expr::div(Expr::one(), Expr::mul(Expr::num(2.0), e.clone())),
            };
            Expr::mul(outer, derivative(a, var))
        }
    }
}
