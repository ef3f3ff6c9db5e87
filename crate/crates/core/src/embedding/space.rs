use std::collections::HashMap;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::linalg;
use crate::ontology::{ConceptId, Ontology};

/// Borrowed view of one n-ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball<'a> {
    pub centre: &'a [f64],
    pub radius: f64,
}

impl<'a> Ball<'a> {
    pub fn new(centre: &'a [f64], radius: f64) -> Self {
        Ball { centre, radius }
    }

    pub fn dim(&self) -> usize {
        self.centre.len()
    }

    /// Signed distance from `point` to the sphere: `‖c − h‖ − r`.
    pub fn boundary_gap(&self, point: &[f64]) -> f64 {
        linalg::distance(self.centre, point) - self.radius
    }
}

/// One ball per concept: centres stored row-major in a flat buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct BallSpace {
    dim: usize,
    names: Vec<String>,
    index: HashMap<String, usize>,
    centres: Vec<f64>,
    radii: Vec<f64>,
}

impl BallSpace {
    pub fn new(dim: usize, names: Vec<String>, centres: Vec<Vec<f64>>, radii: Vec<f64>) -> Result<Self> {
        if names.len() != centres.len() || names.len() != radii.len() {
            return Err(Error::Config(format!(
                "{} names, {} centres and {} radii",
                names.len(),
                centres.len(),
                radii.len()
            )));
        }
        let mut flat = Vec::with_capacity(dim * names.len());
        for c in &centres {
            linalg::check_dims(dim, c.len())?;
            flat.extend_from_slice(c);
        }
        let mut index = HashMap::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate ball `{n}`")));
            }
        }
        Ok(BallSpace {
            dim,
            names,
            index,
            centres: flat,
            radii,
        })
    }

    pub(crate) fn from_flat(dim: usize, names: Vec<String>, centres: Vec<f64>, radii: Vec<f64>) -> Self {
        debug_assert_eq!(centres.len(), dim * names.len());
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        BallSpace {
            dim,
            names,
            index,
            centres,
            radii,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn centre(&self, i: usize) -> &[f64] {
        &self.centres[i * self.dim..(i + 1) * self.dim]
    }

    pub fn centre_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.centres[i * self.dim..(i + 1) * self.dim]
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.radii[i]
    }

    pub fn set_radius(&mut self, i: usize, r: f64) {
        self.radii[i] = r;
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub(crate) fn params_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.centres, &mut self.radii)
    }

    pub fn ball(&self, i: usize) -> Ball<'_> {
        Ball::new(self.centre(i), self.radii[i])
    }

    pub fn ball_of(&self, id: ConceptId) -> Ball<'_> {
        self.ball(id.0)
    }

    pub fn ball_by_name(&self, name: &str) -> Result<Ball<'_>> {
        self.index_of(name)
            .map(|i| self.ball(i))
            .ok_or_else(|| Error::MissingBall(name.to_string()))
    }

    /// Adds `offset` to every centre.
    pub fn translate(&mut self, offset: &[f64]) -> Result<()> {
        linalg::check_dims(self.dim, offset.len())?;
        for c in self.centres.chunks_mut(self.dim) {
            c.iter_mut().zip(offset).for_each(|(x, o)| *x += o);
        }
        Ok(())
    }

    /// Reorders balls to follow the ontology's concept order.
    pub fn aligned_to(&self, ontology: &Ontology) -> Result<BallSpace> {
        let mut centres = Vec::with_capacity(self.dim * ontology.len());
        let mut radii = Vec::with_capacity(ontology.len());
        for name in ontology.concepts() {
            let i = self
                .index_of(name)
                .ok_or_else(|| Error::MissingBall(name.clone()))?;
            centres.extend_from_slice(self.centre(i));
            radii.push(self.radii[i]);
        }
        Ok(BallSpace::from_flat(
            self.dim,
            ontology.concepts().to_vec(),
            centres,
            radii,
        ))
    }

    /// `{"dim":n,"balls":{"concept":{"c":[..],"r":x},..}}` in ball order.
    pub fn to_json(&self) -> Value {
        let mut balls = Map::with_capacity(self.len());
        for i in 0..self.len() {
            balls.insert(
                self.names[i].clone(),
                json!({ "c": self.centre(i), "r": self.radii[i] }),
            );
        }
        json!({ "dim": self.dim, "balls": balls })
    }

    pub fn to_json_string(&self) -> String {
        self.to_json().to_string()
    }

    pub fn from_json_str(text: &str) -> Result<BallSpace> {
        let value: Value = serde_json::from_str(text)?;
        let bad = |m: &str| Error::Parse {
            path: "ball space".into(),
            message: m.to_string(),
        };
        let dim = value
            .get("dim")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("missing integer `dim`"))? as usize;
        let balls = value
            .get("balls")
            .and_then(Value::as_object)
            .ok_or_else(|| bad("missing object `balls`"))?;
        let mut names = Vec::with_capacity(balls.len());
        let mut centres = Vec::with_capacity(balls.len());
        let mut radii = Vec::with_capacity(balls.len());
        for (name, ball) in balls {
            let c: Vec<f64> = serde_json::from_value(
                ball.get("c").cloned().ok_or_else(|| bad("ball without `c`"))?,
            )?;
            let r = ball
                .get("r")
                .and_then(Value::as_f64)
                .ok_or_else(|| bad("ball without numeric `r`"))?;
            names.push(name.clone());
            centres.push(c);
            radii.push(r);
        }
        BallSpace::new(dim, names, centres, radii)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_preserves_order_and_bits() {
        let space = BallSpace::new(
            2,
            vec!["z".into(), "a".into()],
            vec![vec![0.1, -0.3], vec![1.0 / 3.0, 2.5e-7]],
            vec![0.7, 1e-4],
        )
        .unwrap();
        let text = space.to_json_string();
        assert!(text.starts_with(r#"{"dim":2,"balls":{"z":"#));
        let back = BallSpace::from_json_str(&text).unwrap();
        assert_eq!(back, space);
    }

    #[test]
    fn rejects_dimension_mismatch() {
        assert!(matches!(
            BallSpace::new(3, vec!["a".into()], vec![vec![0.0; 2]], vec![1.0]),
            Err(Error::DimensionMismatch { expected: 3, actual: 2 })
        ));
    }
}
