//! Variable sets: the coordinates `x1..xn, y1..yn, t` followed by formal
//! parameters.

use std::fmt;

use super::AlgebraError;

/// Index of a variable inside a [`VarSet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// The ordered variable list shared by every polynomial in one computation.
///
/// Order is fixed: `x1..xn`, `y1..yn`, `t`, then the parameters in the order
/// given. Parameters are constants for every coordinate derivative.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VarSet {
    n: usize,
    params: Vec<String>,
}

impl VarSet {
    pub fn new(n: usize) -> Self {
        VarSet {
            n,
            params: Vec::new(),
        }
    }

    pub fn with_params<S: AsRef<str>>(n: usize, params: &[S]) -> Self {
        VarSet {
            n,
            params: params.iter().map(|p| p.as_ref().to_string()).collect(),
        }
    }

    /// Dimension index of the group `H^n`.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    /// Number of coordinates, `2n + 1`.
    pub fn coord_count(&self) -> usize {
        2 * self.n + 1
    }

    pub fn len(&self) -> usize {
        self.coord_count() + self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `x_j`, 1-based.
    pub fn x(&self, j: usize) -> Var {
        assert!(j >= 1 && j <= self.n, "x index {j} out of range for n = {}", self.n);
        Var(j - 1)
    }

    /// `y_j`, 1-based.
    pub fn y(&self, j: usize) -> Var {
        assert!(j >= 1 && j <= self.n, "y index {j} out of range for n = {}", self.n);
        Var(self.n + j - 1)
    }

    /// Horizontal coordinate `x_k` for `k = 1..2n`, using `x_{n+j} = y_j`.
    pub fn horizontal(&self, k: usize) -> Var {
        assert!(k >= 1 && k <= 2 * self.n, "horizontal index {k} out of range");
        Var(k - 1)
    }

    pub fn t(&self) -> Var {
        Var(2 * self.n)
    }

    /// The `i`-th coordinate, 0-based, in the order `x.., y.., t`.
    pub fn coord(&self, i: usize) -> Var {
        assert!(i < self.coord_count());
        Var(i)
    }

    pub fn param(&self, name: &str) -> Option<Var> {
        self.params
            .iter()
            .position(|p| p == name)
            .map(|i| Var(self.coord_count() + i))
    }

    pub fn is_param(&self, v: Var) -> bool {
        v.0 >= self.coord_count() && v.0 < self.len()
    }

    pub fn contains(&self, v: Var) -> bool {
        v.0 < self.len()
    }

    pub fn check(&self, v: Var) -> Result<Var, AlgebraError> {
        if self.contains(v) {
            Ok(v)
        } else {
            Err(AlgebraError::UnknownVariable(format!("#{}", v.0)))
        }
    }

    pub fn name(&self, v: Var) -> String {
        let i = v.0;
        if i < self.n {
            format!("x{}", i + 1)
        } else if i < 2 * self.n {
            format!("y{}", i - self.n + 1)
        } else if i == 2 * self.n {
            "t".to_string()
        } else if let Some(p) = self.params.get(i - self.coord_count()) {
            p.clone()
        } else {
            format!("v{i}")
        }
    }

    /// Resolves a variable or parameter name.
    pub fn lookup(&self, name: &str) -> Result<Var, AlgebraError> {
        if name == "t" {
            return Ok(self.t());
        }
        if let Some(v) = self.param(name) {
            return Ok(v);
        }
        let unknown = || AlgebraError::UnknownVariable(name.to_string());
        if name.len() < 2 || !name.is_char_boundary(1) {
            return Err(unknown());
        }
        let (head, digits) = name.split_at(1);
        let j: usize = digits.parse().map_err(|_| unknown())?;
        if j == 0 || j > self.n || digits.starts_with('0') {
            return Err(unknown());
        }
        match head {
            "x" => Ok(self.x(j)),
            "y" => Ok(self.y(j)),
            _ => Err(unknown()),
        }
    }

    /// A copy with one more formal parameter appended (no-op if present).
    pub fn extended(&self, name: &str) -> VarSet {
        let mut out = self.clone();
        if out.param(name).is_none() {
            out.params.push(name.to_string());
        }
        out
    }
}

impl fmt::Display for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..self.len()).map(|i| self.name(Var(i))).collect();
        write!(f, "[{}]", names.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_and_names() {
        let vs = VarSet::with_params(2, &["c", "r"]);
        assert_eq!(vs.to_string(), "[x1, x2, y1, y2, t, c, r]");
        assert_eq!(vs.horizontal(3), vs.y(1));
        assert_eq!(vs.lookup("y2").unwrap(), Var(3));
        assert_eq!(vs.lookup("r").unwrap(), Var(6));
        assert!(vs.is_param(Var(5)));
        assert!(!vs.is_param(vs.t()));
        assert!(vs.lookup("x3").is_err());
        assert!(vs.lookup("x0").is_err());
        assert!(vs.lookup("z1").is_err());
    }
}
