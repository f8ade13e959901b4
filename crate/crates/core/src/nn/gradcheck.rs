//! Central finite-difference verification of analytic gradients.

use rand::seq::index::sample;

use super::params::ParamSet;
use crate::rng::stream;

#[derive(Clone, Debug)]
pub struct GradCheckOptions {
    /// Finite-difference step.
    pub step: f64,
    /// Above this many parameters a stratified random subsample is checked.
    pub max_params: usize,
    /// Seed of the subsample.
    pub sample_seed: u64,
    /// Denominator floor of the relative error.
    pub floor: f64,
    /// Coordinates (tensor name, flat index) checked even when subsampling.
    pub include: Vec<(String, usize)>,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            step: 1e-5,
            max_params: 10_000,
            sample_seed: 0,
            floor: 1e-6,
            include: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    /// Coordinates compared.
    pub checked: usize,
    /// Coordinates whose ±step probes straddled a ReLU kink.
    pub skipped_kinks: usize,
    /// Tensor name and flat index of the worst coordinate.
    pub worst: Option<(String, usize)>,
}

impl GradCheckReport {
    pub fn merge(&mut self, other: GradCheckReport) {
        self.checked += other.checked;
        self.skipped_kinks += other.skipped_kinks;
        if other.max_rel_err > self.max_rel_err {
            self.max_rel_err = other.max_rel_err;
            self.worst = other.worst;
        }
    }
}

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compares `analytic` against central differences of `probe`.
///
/// `probe` returns the scalar being differentiated and a signature of the
/// piecewise-linear region it was evaluated in. Coordinates whose perturbed
/// probes leave the region of the unperturbed point are skipped, since the
/// derivative is not defined across the kink.
pub fn check<P, F>(params: &P, analytic: &P, mut probe: F, opts: &GradCheckOptions) -> GradCheckReport
where
    P: ParamSet + Clone,
    F: FnMut(&P) -> (f64, u64),
{
    let grads: Vec<Vec<f64>> = analytic.tensors().iter().map(|t| t.data.to_vec()).collect();
    let names: Vec<String> = params.tensors().iter().map(|t| t.name.clone()).collect();
    let sizes: Vec<usize> = grads.iter().map(Vec::len).collect();
    let total: usize = sizes.iter().sum();

    let mut coords: Vec<(usize, usize)> = if total <= opts.max_params {
        sizes
            .iter()
            .enumerate()
            .flat_map(|(t, &n)| (0..n).map(move |i| (t, i)))
            .collect()
    } else {
        let mut rng = stream(opts.sample_seed, "gradcheck-sample");
        let mut out = Vec::with_capacity(opts.max_params + sizes.len());
        for (t, &n) in sizes.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let share = ((opts.max_params as f64) * n as f64 / total as f64).ceil() as usize;
            let k = share.clamp(1, n);
            out.extend(sample(&mut rng, n, k).into_iter().map(|i| (t, i)));
        }
        out
    };
    for (name, i) in &opts.include {
        if let Some(t) = names.iter().position(|n| n == name) {
            if *i < sizes[t] && !coords.contains(&(t, *i)) {
                coords.push((t, *i));
            }
        }
    }

    let (_, base_sig) = probe(params);
    let mut work = params.clone();
    let mut report = GradCheckReport::default();
    for (t, i) in coords {
        let orig = work.tensors_mut()[t][i];
        work.tensors_mut()[t][i] = orig + opts.step;
        let (plus, sig_plus) = probe(&work);
        work.tensors_mut()[t][i] = orig - opts.step;
        let (minus, sig_minus) = probe(&work);
        work.tensors_mut()[t][i] = orig;
        if sig_plus != base_sig || sig_minus != base_sig {
            report.skipped_kinks += 1;
            continue;
        }
        let numeric = (plus - minus) / (2.0 * opts.step);
        let err = relative_error(grads[t][i], numeric, opts.floor);
        report.checked += 1;
        if report.worst.is_none() || err > report.max_rel_err {
            report.max_rel_err = err;
            report.worst = Some((names[t].clone(), i));
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, Mlp};

    #[test]
    fn degenerate_zero_network_reports_zero() {
        let m = Mlp::glorot(&[3, 4, 2], Activation::Relu, Activation::Linear, &mut stream(1, "z"))
            .zeros_like();
        let x = [0.0; 3];
        let (_, cache) = m.forward(&x).unwrap();
        let (g, _) = m.backward(&cache, &[1.0, 1.0]).unwrap();
        let report = check(
            &m,
            &g,
            |p: &Mlp| (p.predict(&x).unwrap().iter().sum(), 0),
            &GradCheckOptions::default(),
        );
        assert_eq!(report.max_rel_err, 0.0);
        assert_eq!(report.checked, m.num_params());
    }

    #[test]
    fn corrupted_bias_gradient_is_caught() {
        let m = Mlp::glorot(&[3, 4, 2], Activation::Relu, Activation::Linear, &mut stream(2, "c"));
        let x = [0.5, -0.2, 0.9];
        let (_, cache) = m.forward(&x).unwrap();
        let (mut g, _) = m.backward(&cache, &[1.0, -1.0]).unwrap();
        g.layers_mut()[1].bias[0] *= 1.5;
        let report = check(
            &m,
            &g,
            |p: &Mlp| {
                let y = p.predict(&x).unwrap();
                (y[0] - y[1], 0)
            },
            &GradCheckOptions::default(),
        );
        assert!(report.max_rel_err > 1e-2);
        assert_eq!(report.worst.unwrap().0, "layer1.bias");
    }

    #[test]
    fn subsample_covers_every_tensor() {
        let m = Mlp::glorot(&[30, 40, 2], Activation::Relu, Activation::Linear, &mut stream(3, "s"));
        let x = vec![0.1; 30];
        let (_, cache) = m.forward(&x).unwrap();
        let (g, _) = m.backward(&cache, &[1.0, 0.0]).unwrap();
        let opts = GradCheckOptions {
            max_params: 50,
            ..Default::default()
        };
        let report = check(
            &m,
            &g,
            |p: &Mlp| {
                let (y, c) = p.forward(&x).unwrap();
                (y[0], c.relu_signature(p.layers()))
            },
            &opts,
        );
        assert!(report.checked + report.skipped_kinks >= 50);
        assert!(report.checked + report.skipped_kinks < 60);
        assert!(report.max_rel_err < 1e-4);
    }
}
