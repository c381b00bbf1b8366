//! Univariate and bivariate standard normal distribution functions.

use std::f64::consts::{PI, SQRT_2};

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// `P(X < a, Y < b)` for a standard bivariate normal with correlation `rho`.
pub fn bivariate_cdf(a: f64, b: f64, rho: f64) -> f64 {
    bvnu(-a, -b, rho)
}

const GL6: ([f64; 3], [f64; 3]) = (
    [0.9324695142031522, 0.6612093864662647, 0.2386191860831970],
    [0.1713244923791705, 0.3607615730481384, 0.4679139345726904],
);

const GL12: ([f64; 6], [f64; 6]) = (
    [0.9815606342467191, 0.9041172563704750, 0.7699026741943050, 0.5873179542866171, 0.3678314989981802, 0.1252334085114692],
    [0.04717533638651177, 0.1069393259953183, 0.1600783285433464, 0.2031674267230659, 0.2334925365383547, 0.2491470458134029],
);

const GL20: ([f64; 10], [f64; 10]) = (
    [
        0.9931285991850949, 0.9639719272779138, 0.9122344282513259, 0.8391169718222188, 0.7463319064601508,
        0.6360536807265150, 0.5108670019508271, 0.3737060887154196, 0.2277858511416451, 0.07652652113349733,
    ],
    [
        0.01761400713915212, 0.04060142980038694, 0.06267204833410906, 0.08327674157670475, 0.1019301198172404,
        0.1181945319615184, 0.1316886384491766, 0.1420961093183821, 0.1491729864726037, 0.1527533871307259,
    ],
);

/// Upper bivariate normal probability `P(X > h, Y > k)` (Drezner and
/// Wesolowsky's method as refined by Genz), accurate to about 1e-15.
pub fn bvnu(h: f64, k: f64, r: f64) -> f64 {
    if h == f64::INFINITY || k == f64::INFINITY {
        return 0.0;
    }
    if h == f64::NEG_INFINITY {
        return if k == f64::NEG_INFINITY { 1.0 } else { norm_cdf(-k) };
    }
    if k == f64::NEG_INFINITY {
        return norm_cdf(-h);
    }
    if r == 0.0 {
        return norm_cdf(-h) * norm_cdf(-k);
    }

    let (nodes, weights): (&[f64], &[f64]) = if r.abs() < 0.3 {
        (&GL6.0, &GL6.1)
    } else if r.abs() < 0.75 {
        (&GL12.0, &GL12.1)
    } else {
        (&GL20.0, &GL20.1)
    };
    // symmetric rule on [0, 2]
    let points = nodes.iter().zip(weights).flat_map(|(&x, &w)| [(1.0 - x, w), (1.0 + x, w)]);

    let tp = 2.0 * PI;
    let mut hk = h * k;
    let bvn = if r.abs() < 0.925 {
        let hs = (h * h + k * k) / 2.0;
        let asr = r.asin() / 2.0;
        let sum: f64 = points
            .map(|(x, w)| {
                let sn = (asr * x).sin();
                w * ((sn * hk - hs) / (1.0 - sn * sn)).exp()
            })
            .sum();
        sum * asr / tp + norm_cdf(-h) * norm_cdf(-k)
    } else {
        let mut k = k;
        if r < 0.0 {
            k = -k;
            hk = -hk;
        }
        let mut bvn = 0.0;
        if r.abs() < 1.0 {
            let as_ = 1.0 - r * r;
            let mut a = as_.sqrt();
            let bs = (h - k) * (h - k);
            let c = (4.0 - hk) / 8.0;
            let d = (12.0 - hk) / 80.0;
            let asr = -(bs / as_ + hk) / 2.0;
            if asr > -100.0 {
                bvn = a * asr.exp() * (1.0 - c * (bs - as_) * (1.0 - d * bs) / 3.0 + c * d * as_ * as_);
            }
            if hk > -100.0 {
                let b = bs.sqrt();
                let sp = tp.sqrt() * norm_cdf(-b / a);
                bvn -= (-hk / 2.0).exp() * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
            }
            a /= 2.0;
            let sum: f64 = points
                .filter_map(|(x, w)| {
                    let xs = (a * x) * (a * x);
                    let asr = -(bs / xs + hk) / 2.0;
                    (asr > -100.0).then(|| {
                        let sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
                        let rs = (1.0 - xs).sqrt();
                        let ep = (-(hk / 2.0) * xs / ((1.0 + rs) * (1.0 + rs))).exp() / rs;
                        w * asr.exp() * (sp - ep)
                    })
                })
                .sum();
            bvn = (a * sum - bvn) / tp;
        }
        if r > 0.0 {
            bvn + norm_cdf(-h.max(k))
        } else if h >= k {
            -bvn
        } else {
            let l = if h < 0.0 { norm_cdf(k) - norm_cdf(h) } else { norm_cdf(-h) - norm_cdf(-k) };
            l - bvn
        }
    };
    bvn.clamp(0.0, 1.0)
}
