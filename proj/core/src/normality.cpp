#include "ema/normality.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <nlohmann/json.hpp>

namespace ema {

const char* test_kind_name(NormalityTestKind kind) {
  switch (kind) {
    case NormalityTestKind::ShapiroWilk: return "shapiro_wilk";
    case NormalityTestKind::AndersonDarling: return "anderson_darling";
    case NormalityTestKind::Both: return "both";
  }
  return "?";
}

std::optional<NormalityTestKind> test_kind_from_name(const std::string& name) {
  if (name == "sw" || name == "shapiro_wilk") return NormalityTestKind::ShapiroWilk;
  if (name == "ad" || name == "anderson_darling") return NormalityTestKind::AndersonDarling;
  if (name == "both") return NormalityTestKind::Both;
  return std::nullopt;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440); }

// AS 241 (PPND16): rational approximations on three regions.
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw Error(ErrorCode::InvalidConfig, "normal_quantile needs p in (0, 1)");
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
               1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
             1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
               5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
             4.2313330701600911252e+1) * r + 1.0);
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
              4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
              2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
              5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
  }
  return (q < 0.0) ? -value : value;
}

namespace {

double poly(const double* c, int n, double x) {
  double acc = c[0];
  double xp = 1.0;
  for (int i = 1; i < n; ++i) {
    xp *= x;
    acc += c[i] * xp;
  }
  return acc;
}

void check_testable(const SortedSample& sample) {
  if (sample.back() == sample.front())
    throw Error(ErrorCode::ConstantSample, "zero-variance sample");
}

}  // namespace

NormalityTestResult shapiro_wilk(const SortedSample& sample, double alpha) {
  const std::size_t n = sample.size();
  if (n < 3 || n > 5000)
    throw Error(ErrorCode::SampleSizeOutOfRange,
                "shapiro_wilk supports 3 <= n <= 5000, got " + std::to_string(n));
  check_testable(sample);
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::UnsupportedAlpha, "alpha in (0,1)");

  // Royston (1995), AS R94.
  static const double c1[6] = {0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056};
  static const double c2[6] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
  static const double c3[4] = {0.5440, -0.39978, 0.025054, -6.714e-4};
  static const double c4[4] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static const double c5[4] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static const double c6[3] = {-0.4803, -0.082676, 0.0030302};
  static const double g[2] = {-2.273, 0.459};

  const auto& x = sample.values();
  const std::size_t n2 = n / 2;
  std::vector<double> a(n2);  // weights for the lower half (negative tail order scores)

  if (n == 3) {
    a[0] = 0.70710678118654752440;  // sqrt(1/2)
  } else {
    const double an25 = static_cast<double>(n) + 0.25;
    double summ2 = 0.0;
    for (std::size_t i = 1; i <= n2; ++i) {
      a[i - 1] = normal_quantile((static_cast<double>(i) - 0.375) / an25);
      summ2 += a[i - 1] * a[i - 1];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(static_cast<double>(n));
    const double a1 = poly(c1, 6, rsn) - a[0] / ssumm2;

    std::size_t i1;
    double fac;
    double a2 = 0.0;
    if (n > 5) {
      i1 = 2;
      a2 = -a[1] / ssumm2 + poly(c2, 6, rsn);
      fac = std::sqrt((summ2 - 2.0 * a[0] * a[0] - 2.0 * a[1] * a[1]) /
                      (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[1] = a2;
    } else {
      i1 = 1;
      fac = std::sqrt((summ2 - 2.0 * a[0] * a[0]) / (1.0 - 2.0 * a1 * a1));
    }
    a[0] = a1;
    for (std::size_t i = i1; i < n2; ++i) a[i] /= -fac;
  }

  // W = (sum a_i x_(i))^2 / SSQ, with antisymmetric weights; computed on
  // range-scaled values for stability.
  const double range = x[n - 1] - x[0];
  double sx = 0.0;
  for (double v : x) sx += v / range;
  const double xbar = sx / static_cast<double>(n);

  double ssx = 0.0, sax = 0.0, ssa = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double w;
    const std::size_t j = n - 1 - i;
    if (i < j)
      w = -a[i];
    else if (i > j)
      w = a[j];
    else
      w = 0.0;
    const double xd = x[i] / range - xbar;
    ssx += xd * xd;
    sax += w * xd;
    ssa += w * w;
  }
  const double w1 = (std::sqrt(ssa * ssx) - sax) * (std::sqrt(ssa * ssx) + sax) / (ssa * ssx);
  const double W = 1.0 - w1;

  double p;
  if (n == 3) {
    constexpr double pi6 = 1.90985931710274;    // 6/pi
    constexpr double stqr = 1.04719755119660;   // asin(sqrt(3/4))
    p = pi6 * (std::asin(std::sqrt(W)) - stqr);
    p = std::clamp(p, 0.0, 1.0);
  } else {
    const double y = std::log(w1);
    const double an = static_cast<double>(n);
    double mu, sigma, z;
    if (n <= 11) {
      const double gamma = poly(g, 2, an);
      if (y >= gamma) {
        p = 1e-99;
        NormalityTestResult r0{W, p, std::nullopt, std::nullopt, alpha, p > alpha};
        return r0;
      }
      const double yt = -std::log(gamma - y);
      mu = poly(c3, 4, an);
      sigma = std::exp(poly(c4, 4, an));
      z = (yt - mu) / sigma;
    } else {
      const double lx = std::log(an);
      mu = poly(c5, 4, lx);
      sigma = std::exp(poly(c6, 3, lx));
      z = (y - mu) / sigma;
    }
    p = 1.0 - normal_cdf(z);
  }

  NormalityTestResult result;
  result.statistic = W;
  result.p_value = p;
  result.alpha = alpha;
  result.is_normal = p > alpha;
  return result;
}

NormalityTestResult anderson_darling(const SortedSample& sample, double alpha) {
  const std::size_t n = sample.size();
  if (n < 8)
    throw Error(ErrorCode::SampleSizeOutOfRange,
                "anderson_darling needs n >= 8, got " + std::to_string(n));
  check_testable(sample);

  // Case-3 critical values (both parameters estimated), Stephens.
  static const std::array<std::pair<double, double>, 4> kCritical = {{
      {0.10, 0.631}, {0.05, 0.752}, {0.025, 0.873}, {0.01, 1.035}}};
  double critical = -1.0;
  for (const auto& [a, c] : kCritical) {
    if (std::abs(alpha - a) < 1e-12) critical = c;
  }
  if (critical < 0.0)
    throw Error(ErrorCode::UnsupportedAlpha,
                "anderson_darling supports alpha in {0.10, 0.05, 0.025, 0.01}");

  const auto& x = sample.values();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  // log Phi and log(1-Phi) via erfc for tail stability
  auto log_cdf = [](double z) { return std::log(0.5 * std::erfc(-z * 0.70710678118654752440)); };
  auto log_sf = [](double z) { return std::log(0.5 * std::erfc(z * 0.70710678118654752440)); };

  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double zi = (x[i] - mean) / sd;
    const double zr = (x[n - 1 - i] - mean) / sd;
    acc += (2.0 * static_cast<double>(i) + 1.0) * (log_cdf(zi) + log_sf(zr));
  }
  const double a2 = -static_cast<double>(n) - acc / static_cast<double>(n);
  const double nn = static_cast<double>(n);
  const double modified = a2 * (1.0 + 0.75 / nn + 2.25 / (nn * nn));

  NormalityTestResult result;
  result.statistic = a2;
  result.modified_statistic = modified;
  result.critical_value = critical;
  result.alpha = alpha;
  result.is_normal = modified < critical;
  return result;
}

PretestReport pretest_round(const std::vector<CoordinateSample>& samples, double alpha,
                            NormalityTestKind kind) {
  PretestReport report;
  report.alpha = alpha;
  report.kind = kind;
  report.total_tests = samples.size();

  for (const auto& s : samples) {
    SortedSample sorted = SortedSample::from_unsorted(s.values);
    if (sorted.back() == sorted.front()) {
      // Zero-variance coordinates (frozen parameters) count as passing.
      ++report.constant_count;
      ++report.passed;
      continue;
    }
    try {
      bool ok = true;
      if (kind == NormalityTestKind::ShapiroWilk || kind == NormalityTestKind::Both)
        ok = ok && shapiro_wilk(sorted, alpha).is_normal;
      if (kind == NormalityTestKind::AndersonDarling || kind == NormalityTestKind::Both)
        ok = ok && anderson_darling(sorted, alpha).is_normal;
      if (ok)
        ++report.passed;
      else
        ++report.failed;
    } catch (const Error&) {
      ++report.error_count;
    }
  }
  report.rate = report.total_tests == 0
                    ? 0.0
                    : static_cast<double>(report.passed) / static_cast<double>(report.total_tests);
  return report;
}

std::string pretest_report_to_json(const PretestReport& report) {
  nlohmann::json j{
      {"total", report.total_tests},
      {"passed", report.passed},
      {"failed", report.failed},
      {"rate", report.rate},
      {"alpha", report.alpha},
      {"kind", test_kind_name(report.kind)},
      {"constant_count", report.constant_count},
      {"error_count", report.error_count},
  };
  return j.dump(2);
}

}  // namespace ema
