use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;

use crate::rational::{denominator_lcm, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scaled {
    pub values: Vec<Rational>,
    /// Factor applied to each group.
    pub group_factors: Vec<BigInt>,
    /// Factor applied to the shared variables; a multiple of every group
    /// factor. This is the `c_s` reported for the whole assignment.
    pub factor: BigInt,
}

/// Clears denominators group by group. Each group is multiplied by the lcm
/// of its own denominators; `shared` variables (and any variable in no group)
/// are multiplied by the lcm over everything.
pub fn scale_to_integral(values: &[Rational], groups: &[Vec<usize>], shared: &[usize]) -> Scaled {
    let group_factors: Vec<BigInt> = groups
        .iter()
        .map(|g| denominator_lcm(g.iter().map(|&v| &values[v])))
        .collect();
    let mut factor = group_factors.iter().fold(BigInt::one(), |acc, f| acc.lcm(f));
    factor = factor.lcm(&denominator_lcm(shared.iter().map(|&v| &values[v])));
    let mut in_group = vec![None; values.len()];
    for (gi, g) in groups.iter().enumerate() {
        for &v in g {
            in_group[v] = Some(gi);
        }
    }
    let loose: Vec<&Rational> = (0..values.len())
        .filter(|&v| in_group[v].is_none())
        .map(|v| &values[v])
        .collect();
    factor = factor.lcm(&denominator_lcm(loose));
    let scaled = values
        .iter()
        .enumerate()
        .map(|(v, x)| {
            let f = match in_group[v] {
                Some(g) => &group_factors[g],
                None => &factor,
            };
            x * Rational::from_integer(f.clone())
        })
        .collect();
    Scaled {
        values: scaled,
        group_factors,
        factor,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, ratio};

    #[test]
    fn halves_scale_by_two() {
        let s = scale_to_integral(&[ratio(1, 2), ratio(1, 2)], &[vec![0]], &[1]);
        assert_eq!(s.values, vec![rat(1), rat(1)]);
        assert_eq!(s.factor, BigInt::from(2));
    }

    #[test]
    fn integral_input_is_unchanged() {
        let vals = vec![rat(3), rat(0), rat(1)];
        let s = scale_to_integral(&vals, &[vec![0, 1], vec![2]], &[]);
        assert_eq!(s.values, vals);
        assert_eq!(s.factor, BigInt::one());
    }

    #[test]
    fn groups_scale_independently() {
        let vals = vec![ratio(1, 3), ratio(1, 2), ratio(1, 4)];
        let s = scale_to_integral(&vals, &[vec![0], vec![1]], &[2]);
        assert_eq!(s.group_factors, vec![BigInt::from(3), BigInt::from(2)]);
        assert_eq!(s.factor, BigInt::from(12));
        assert_eq!(s.values, vec![rat(1), rat(1), rat(3)]);
    }
}
