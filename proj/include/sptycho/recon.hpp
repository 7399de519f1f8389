#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "sptycho/field.hpp"
#include "sptycho/propagate.hpp"
#include "sptycho/resample.hpp"
#include "sptycho/simulate.hpp"
#include "sptycho/threading.hpp"
#include "sptycho/trajectory.hpp"

namespace sptycho {

struct AutofocusSpec {
  double d_min = 0.0;
  double d_max = 0.0;
  int coarse_steps = 21;
  int refine_levels = 6;
  int max_frames = 20;
  int iterations = 3;
};

struct ReconConfig {
  int upsampling = 3;   // s
  int iterations = 10;  // N
  double alpha_object = 0.9;
  double alpha_probe = 0.5;
  double momentum = 0.9;  // beta; 0 disables
  bool momentum_object = true;
  bool momentum_probe = true;
  bool fixed_probe = false;
  std::uint64_t order_seed = 0;
  // NaN means "use the dataset's nominal distance".
  double distance_um = std::numeric_limits<double>::quiet_NaN();
  std::optional<AutofocusSpec> autofocus;
  int threads = 1;

  void validate() const {
    if (upsampling < 1) throw ValidationError("recon: upsampling factor must be >= 1");
    if (iterations < 1) throw ValidationError("recon: iteration count must be >= 1");
    if (!(alpha_object > 0.0 && alpha_object <= 1.0))
      throw ValidationError("recon: alpha_object must lie in (0, 1]");
    if (!(alpha_probe > 0.0 && alpha_probe <= 1.0))
      throw ValidationError("recon: alpha_probe must lie in (0, 1]");
    if (!(momentum >= 0.0 && momentum < 1.0))
      throw ValidationError("recon: momentum must lie in [0, 1)");
    if (autofocus) {
      if (!(autofocus->d_min < autofocus->d_max))
        throw ValidationError("recon: autofocus range must satisfy d_min < d_max");
      if (autofocus->coarse_steps < 2)
        throw ValidationError("recon: autofocus needs at least 2 coarse steps");
      if (autofocus->iterations < 1 || autofocus->max_frames < 2 || autofocus->refine_levels < 0)
        throw ValidationError("recon: bad autofocus parameters");
    }
  }
};

template <typename Scalar>
struct ReconState {
  ComplexField<Scalar> object;  // sM x sM
  ComplexField<Scalar> probe;
  ComplexArray<Scalar> velocity_object;
  ComplexArray<Scalar> velocity_probe;
  int iteration = 0;
  std::vector<double> residuals;
};

template <typename Scalar>
struct ReconResult {
  ComplexField<Scalar> object;
  ComplexField<Scalar> probe;
  std::vector<double> residual_history;
  double final_residual = 0.0;
  double distance_um = 0.0;
  ScanTrajectory trajectory;
  std::vector<std::pair<double, double>> autofocus_curve;  // (d, metric)
  bool autofocus_on_boundary = false;
  double solve_seconds = 0.0;
};

struct AutofocusResult {
  double distance_um = 0.0;
  std::vector<std::pair<double, double>> curve;
  bool on_boundary = false;
};

// The random frame order used by every pass of a run.
inline std::vector<int> frame_visit_order(int frame_count, std::uint64_t seed) {
  std::vector<int> order(frame_count);
  for (int j = 0; j < frame_count; ++j) order[j] = j;
  std::mt19937_64 gen(seed);
  std::shuffle(order.begin(), order.end(), gen);
  return order;
}

// --- elementwise operations of the update loop -----------------------------

// Detector-plane magnitude constraint on the upsampled grid: the intensity
// is replaced by the measurement at the stride-s lattice only; off-lattice
// samples pass through untouched. Zero-magnitude lattice pixels take phase 1.
template <typename Scalar>
ComplexArray<Scalar> subsampled_projection(const ComplexArray<Scalar>& psi,
                                           const RealArray<Scalar>& measured_intensity, int s) {
  if (s < 1) throw ValidationError("subsampled_projection: factor must be >= 1");
  if (psi.rows() != measured_intensity.rows() * s || psi.cols() != measured_intensity.cols() * s)
    throw ValidationError("subsampled_projection: grid does not match measurement times the factor");
  ComplexArray<Scalar> out = psi;
  const Scalar eps = static_cast<Scalar>(1e-12);
  for (Index c = 0; c < measured_intensity.cols(); ++c)
    for (Index r = 0; r < measured_intensity.rows(); ++r) {
      const std::complex<Scalar> v = psi(s * r, s * c);
      const Scalar amp = std::sqrt(std::max<Scalar>(measured_intensity(r, c), 0));
      const Scalar mag = std::abs(v);
      out(s * r, s * c) = mag < eps ? std::complex<Scalar>(amp, 0) : v * (amp / mag);
    }
  return out;
}

// rPIE object update: O += conj(P_j)(phi' - phi) / ((1-a)|P_j|^2 + a max|P_j|^2).
template <typename Scalar>
void rpie_update_object(ComplexArray<Scalar>& object, const ComplexArray<Scalar>& probe_shifted,
                        const ComplexArray<Scalar>& exit_before, const ComplexArray<Scalar>& exit_after,
                        double alpha) {
  const Scalar max_p2 = probe_shifted.abs2().maxCoeff();
  if (!(max_p2 > 0)) throw NumericalError("rpie_update_object: probe is identically zero");
  const Scalar a = static_cast<Scalar>(alpha);
  object += probe_shifted.conjugate() * (exit_after - exit_before) /
            ((Scalar(1) - a) * probe_shifted.abs2() + a * max_p2);
}

// rPIE probe update, roles swapped.
template <typename Scalar>
void rpie_update_probe(ComplexArray<Scalar>& probe_shifted, const ComplexArray<Scalar>& object,
                       const ComplexArray<Scalar>& exit_before, const ComplexArray<Scalar>& exit_after,
                       double alpha) {
  const Scalar max_o2 = object.abs2().maxCoeff();
  if (!(max_o2 > 0)) throw NumericalError("rpie_update_probe: object is identically zero");
  const Scalar a = static_cast<Scalar>(alpha);
  probe_shifted += object.conjugate() * (exit_after - exit_before) /
                   ((Scalar(1) - a) * object.abs2() + a * max_o2);
}

// --- initialization ---------------------------------------------------------

// Probe amplitude: average of the shift-backed raw frames; object amplitude:
// plain average. Both sqrt-ed, band-limited-upsampled by s, zero phase.
template <typename Scalar>
ReconState<Scalar> initialize(const FrameStack& frames, const ScanTrajectory& trajectory, int s) {
  validate_frame_stack(frames);
  if (s < 1) throw ValidationError("initialize: upsampling factor must be >= 1");
  if (trajectory.size() != static_cast<std::size_t>(frames.count()))
    throw ValidationError("initialize: trajectory length disagrees with the frame count");

  const Index m = frames.frame_size();
  ArrayXXd mean_plain = ArrayXXd::Zero(m, m);
  ArrayXXd mean_back = ArrayXXd::Zero(m, m);
  for (int j = 0; j < frames.count(); ++j) {
    mean_plain += frames.frames[j];
    const Index bx = static_cast<Index>(std::llround(trajectory.shifts[j].x()));
    const Index by = static_cast<Index>(std::llround(trajectory.shifts[j].y()));
    mean_back += circular_shift(frames.frames[j], -bx, -by);
  }
  mean_plain /= frames.count();
  mean_back /= frames.count();

  const ArrayXXcd object0 = fourier_upsample<double>(mean_plain.sqrt().eval(), s);
  const ArrayXXcd probe0 = fourier_upsample<double>(mean_back.sqrt().eval(), s);

  ReconState<Scalar> state;
  const double pitch_hi = frames.detector_pitch_um / s;
  state.object.pitch_um = state.probe.pitch_um = pitch_hi;
  state.object.wavelength_um = state.probe.wavelength_um = frames.wavelength_um;
  state.object.data = object0.real().template cast<std::complex<Scalar>>();
  state.probe.data = probe0.real().template cast<std::complex<Scalar>>();
  state.velocity_object = ComplexArray<Scalar>::Zero(m * s, m * s);
  state.velocity_probe = ComplexArray<Scalar>::Zero(m * s, m * s);
  return state;
}

// --- the solver -------------------------------------------------------------

namespace detail {

template <typename Scalar>
class ReconEngine {
public:
  ReconEngine(const FrameStack& frames, const ScanTrajectory& trajectory, const ReconConfig& config,
              double distance_um)
      : frames_(frames), trajectory_(trajectory), config_(config), distance_um_(distance_um) {
    validate_frame_stack(frames);
    config.validate();
    if (trajectory.size() != static_cast<std::size_t>(frames.count()))
      throw ValidationError("recon: trajectory length disagrees with the frame count");

    m_ = frames.frame_size();
    s_ = config.upsampling;
    n_ = m_ * s_;
    pitch_hi_ = frames.detector_pitch_um / s_;

    kernel_ = make_kernel<Scalar>(n_, n_, pitch_hi_, frames.wavelength_um, distance_um);

    sqrt_measured_.reserve(frames.count());
    total_intensity_ = 0.0;
    for (const auto& frame : frames.frames) {
      total_intensity_ += frame.sum();
      sqrt_measured_.push_back(frame.sqrt().template cast<Scalar>().eval());
    }
    if (!(total_intensity_ > 0.0)) total_intensity_ = 1.0;

    phi_.resize(n_, n_);
    spec_.resize(n_, n_);
    fold_.resize(m_, m_);
    delta_.resize(m_, m_);
    row_idx_.resize(n_);
    col_idx_.resize(n_);
  }

  // Runs config.iterations passes; appends residuals to the state.
  void run(ReconState<Scalar>& state) {
    if (state.object.rows() != n_ || state.object.cols() != n_ || state.probe.rows() != n_ ||
        state.probe.cols() != n_)
      throw ValidationError("recon: state grid disagrees with frames times the upsampling factor");

    const std::vector<int> order = frame_visit_order(frames_.count(), config_.order_seed);
    const bool use_momentum = config_.momentum > 0.0;

    ComplexArray<Scalar> object_ref, probe_ref;
    for (int pass = 0; pass < config_.iterations; ++pass) {
      if (use_momentum) {
        if (config_.momentum_object) object_ref = state.object.data;
        if (momentum_probe_active()) probe_ref = state.probe.data;
      }

      double pass_residual = 0.0;
      for (int k = 0; k < frames_.count(); ++k)
        pass_residual += frame_update(state, order[k]);

      state.iteration += 1;
      const double r_n = pass_residual / total_intensity_;
      if (!std::isfinite(r_n))
        throw NumericalError("recon: non-finite residual at iteration " + std::to_string(state.iteration));
      if (!all_finite(state.object.data) || !all_finite(state.probe.data))
        throw NumericalError("recon: non-finite field values at iteration " + std::to_string(state.iteration));
      state.residuals.push_back(r_n);

      if (use_momentum) {
        const Scalar beta = static_cast<Scalar>(config_.momentum);
        if (config_.momentum_object) {
          state.velocity_object = beta * state.velocity_object + (state.object.data - object_ref);
          state.object.data += beta * state.velocity_object;
        }
        if (momentum_probe_active()) {
          state.velocity_probe = beta * state.velocity_probe + (state.probe.data - probe_ref);
          state.probe.data += beta * state.velocity_probe;
        }
      }
    }
  }

private:
  bool momentum_probe_active() const { return config_.momentum_probe && !config_.fixed_probe; }

  // One rPIE visit of frame j. The projection only changes the exit wave at
  // the stride-s lattice, so the detector-plane step works on the M x M
  // alias-folded spectrum and the correction is tiled back, which needs two
  // full-grid transforms per visit instead of four:
  //   psi_lattice = idft_M(fold(H . dft(phi))) / s^2M^2
  //   phi'        = idft_sM(conj(H) . (H . dft(phi) + dft_M(delta)_tiled))
  double frame_update(ReconState<Scalar>& state, int j) {
    const Index sx = static_cast<Index>(std::llround(s_ * trajectory_.shifts[j].x()));
    const Index sy = static_cast<Index>(std::llround(s_ * trajectory_.shifts[j].y()));
    for (Index r = 0; r < n_; ++r) row_idx_[r] = wrap_index(r - sy, n_);
    for (Index c = 0; c < n_; ++c) col_idx_[c] = wrap_index(c - sx, n_);

    auto& object = state.object.data;
    auto& probe = state.probe.data;

    // exit wave phi = O . P_j and the pre-update normalization maxima
    Scalar max_o2 = 0, max_p2 = 0;
    for (Index c = 0; c < n_; ++c) {
      const std::complex<Scalar>* pcol = probe.data() + col_idx_[c] * n_;
      const std::complex<Scalar>* ocol = object.data() + c * n_;
      std::complex<Scalar>* fcol = phi_.data() + c * n_;
      for (Index r = 0; r < n_; ++r) {
        const std::complex<Scalar> p = pcol[row_idx_[r]];
        const std::complex<Scalar> o = ocol[r];
        fcol[r] = o * p;
        max_o2 = std::max(max_o2, std::norm(o));
        max_p2 = std::max(max_p2, std::norm(p));
      }
    }
    if (!(max_p2 > 0))
      throw NumericalError("recon: probe is identically zero (frame " + std::to_string(j) + ")");
    if (!config_.fixed_probe && !(max_o2 > 0))
      throw NumericalError("recon: object is identically zero (frame " + std::to_string(j) + ")");

    fft::transform2d(phi_, spec_, false);

    // alias-fold the propagated spectrum onto the detector grid
    fold_.setZero();
    for (Index c = 0; c < n_; ++c) {
      const std::complex<Scalar>* scol = spec_.data() + c * n_;
      const std::complex<Scalar>* hcol = kernel_.values.data() + c * n_;
      std::complex<Scalar>* fcol = fold_.data() + (c % m_) * m_;
      for (Index r = 0; r < n_; ++r) fcol[r % m_] += hcol[r] * scol[r];
    }
    fft::transform2d(fold_, true);

    // detector-plane magnitude replacement at the lattice
    const double inv_sm2 = 1.0 / (static_cast<double>(n_) * static_cast<double>(n_));
    const Scalar inv_sm2_s = static_cast<Scalar>(inv_sm2);
    const Scalar eps = static_cast<Scalar>(1e-12);
    const RealArray<Scalar>& amp = sqrt_measured_[j];
    double residual = 0.0;
    for (Index i = 0; i < fold_.size(); ++i) {
      const std::complex<Scalar> psi = fold_.data()[i] * inv_sm2_s;
      const Scalar mag = std::abs(psi);
      const Scalar target = amp.data()[i];
      const double diff = static_cast<double>(mag) - static_cast<double>(target);
      residual += diff * diff;
      const std::complex<Scalar> replaced =
          mag < eps ? std::complex<Scalar>(target, 0) : psi * (target / mag);
      delta_.data()[i] = replaced - psi;
    }
    if (!std::isfinite(residual))
      throw NumericalError("recon: non-finite detector residual (frame " + std::to_string(j) + ")");

    fft::transform2d(delta_, false);

    // recombined spectrum: conj(H) (H spec + tiled correction)
    for (Index c = 0; c < n_; ++c) {
      std::complex<Scalar>* scol = spec_.data() + c * n_;
      const std::complex<Scalar>* hcol = kernel_.values.data() + c * n_;
      const std::complex<Scalar>* dcol = delta_.data() + (c % m_) * m_;
      for (Index r = 0; r < n_; ++r)
        scol[r] = std::conj(hcol[r]) * (hcol[r] * scol[r] + dcol[r % m_]);
    }
    fft::transform2d(spec_, true);

    // fused rPIE updates from the pre-update fields
    const Scalar a_o = static_cast<Scalar>(config_.alpha_object);
    const Scalar a_p = static_cast<Scalar>(config_.alpha_probe);
    const Scalar denom_o_const = a_o * max_p2;
    const Scalar denom_p_const = a_p * max_o2;
    const bool update_probe = !config_.fixed_probe;
    for (Index c = 0; c < n_; ++c) {
      std::complex<Scalar>* pcol = probe.data() + col_idx_[c] * n_;
      std::complex<Scalar>* ocol = object.data() + c * n_;
      const std::complex<Scalar>* fcol = phi_.data() + c * n_;
      const std::complex<Scalar>* scol = spec_.data() + c * n_;
      for (Index r = 0; r < n_; ++r) {
        const std::complex<Scalar> d = scol[r] * inv_sm2_s - fcol[r];
        const std::complex<Scalar> o = ocol[r];
        const std::complex<Scalar> p = pcol[row_idx_[r]];
        ocol[r] = o + std::conj(p) * d / ((Scalar(1) - a_o) * std::norm(p) + denom_o_const);
        if (update_probe)
          pcol[row_idx_[r]] = p + std::conj(o) * d / ((Scalar(1) - a_p) * std::norm(o) + denom_p_const);
      }
    }
    return residual;
  }

  const FrameStack& frames_;
  const ScanTrajectory& trajectory_;
  ReconConfig config_;
  double distance_um_;
  Index m_ = 0, n_ = 0;
  int s_ = 1;
  double pitch_hi_ = 0.0;
  double total_intensity_ = 0.0;
  PropagationKernel<Scalar> kernel_;
  std::vector<RealArray<Scalar>> sqrt_measured_;
  ComplexArray<Scalar> phi_, spec_, fold_, delta_;
  std::vector<Index> row_idx_, col_idx_;
};

inline double nominal_or_config_distance(const FrameStack& frames, const ReconConfig& config) {
  return std::isnan(config.distance_um) ? frames.nominal_distance_um : config.distance_um;
}

}  // namespace detail

// Full iteration loop of the solver (Fig-2 style pass structure): seeded
// random frame order fixed for the whole run, per-frame rPIE updates, probe
// shift realized by gather/scatter indexing, per-pass Nesterov momentum.
template <typename Scalar>
ReconResult<Scalar> iterate(ReconState<Scalar>& state, const FrameStack& frames,
                            const ScanTrajectory& trajectory, const ReconConfig& config) {
  config.validate();
  const double distance = detail::nominal_or_config_distance(frames, config);
  detail::ReconEngine<Scalar> engine(frames, trajectory, config, distance);

  const auto t0 = std::chrono::steady_clock::now();
  engine.run(state);
  const auto t1 = std::chrono::steady_clock::now();

  ReconResult<Scalar> result;
  result.object = state.object;
  result.probe = state.probe;
  result.residual_history = state.residuals;
  result.final_residual = state.residuals.empty() ? 0.0 : state.residuals.back();
  result.distance_um = distance;
  result.trajectory = trajectory;
  result.solve_seconds = std::chrono::duration<double>(t1 - t0).count();
  return result;
}

// Distance search: short low-frame-count reconstructions on a coarse grid,
// then golden-section refinement of metric(d) = -residual around the best
// coarse candidate.
template <typename Scalar = double>
AutofocusResult autofocus(const FrameStack& frames, const ScanTrajectory& trajectory,
                          const ReconConfig& config) {
  config.validate();
  if (!config.autofocus) throw ValidationError("autofocus: no distance range configured");
  if (frames.count() < 2) throw ValidationError("autofocus: need at least 2 frames");
  const AutofocusSpec af = *config.autofocus;

  // evenly strided frame subset
  const int n_sub = std::min(frames.count(), af.max_frames);
  FrameStack sub;
  sub.detector_pitch_um = frames.detector_pitch_um;
  sub.wavelength_um = frames.wavelength_um;
  sub.nominal_distance_um = frames.nominal_distance_um;
  sub.upsampling_hint = frames.upsampling_hint;
  ScanTrajectory sub_traj;
  for (int k = 0; k < n_sub; ++k) {
    const int j = static_cast<int>(static_cast<long long>(k) * frames.count() / n_sub);
    sub.frames.push_back(frames.frames[j]);
    sub_traj.shifts.push_back(trajectory.shifts[j]);
  }

  ReconConfig short_cfg = config;
  short_cfg.autofocus.reset();
  short_cfg.iterations = af.iterations;
  short_cfg.threads = 1;

  const auto metric_at = [&](double d) {
    ReconConfig cfg = short_cfg;
    cfg.distance_um = d;
    ReconState<Scalar> state = initialize<Scalar>(sub, sub_traj, cfg.upsampling);
    const ReconResult<Scalar> r = iterate(state, sub, sub_traj, cfg);
    return -r.final_residual;
  };

  AutofocusResult result;
  std::vector<double> coarse_d(af.coarse_steps), coarse_metric(af.coarse_steps);
  for (int i = 0; i < af.coarse_steps; ++i)
    coarse_d[i] = af.d_min + (af.d_max - af.d_min) * i / (af.coarse_steps - 1);
  parallel_for(static_cast<std::size_t>(af.coarse_steps), config.threads,
               [&](std::size_t i) { coarse_metric[i] = metric_at(coarse_d[i]); });

  int best = 0;
  for (int i = 0; i < af.coarse_steps; ++i) {
    result.curve.emplace_back(coarse_d[i], coarse_metric[i]);
    if (coarse_metric[i] > coarse_metric[best]) best = i;
  }
  result.on_boundary = (best == 0 || best == af.coarse_steps - 1);

  double best_d = coarse_d[best];
  double best_metric = coarse_metric[best];

  // golden-section refinement inside the bracketing coarse cells
  double lo = coarse_d[std::max(0, best - 1)];
  double hi = coarse_d[std::min(af.coarse_steps - 1, best + 1)];
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = hi - (hi - lo) * kInvPhi;
  double x2 = lo + (hi - lo) * kInvPhi;
  double f1 = metric_at(x1), f2 = metric_at(x2);
  result.curve.emplace_back(x1, f1);
  result.curve.emplace_back(x2, f2);
  for (int level = 0; level < af.refine_levels; ++level) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + (hi - lo) * kInvPhi;
      f2 = metric_at(x2);
      result.curve.emplace_back(x2, f2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - (hi - lo) * kInvPhi;
      f1 = metric_at(x1);
      result.curve.emplace_back(x1, f1);
    }
  }
  for (const auto& [d, metric] : result.curve) {
    if (metric > best_metric) {
      best_metric = metric;
      best_d = d;
    }
  }
  std::sort(result.curve.begin(), result.curve.end());
  result.distance_um = best_d;
  return result;
}

// End-to-end reconstruction: optional autofocus, initialization (or a
// supplied fixed probe), then the full iteration loop.
template <typename Scalar>
ReconResult<Scalar> reconstruct(const FrameStack& frames, const ScanTrajectory& trajectory,
                                ReconConfig config, const ComplexField<Scalar>* fixed_probe = nullptr) {
  config.validate();
  if (config.fixed_probe && fixed_probe == nullptr)
    throw ValidationError("reconstruct: fixed-probe mode needs a probe field");

  AutofocusResult af;
  if (config.autofocus) {
    af = autofocus<Scalar>(frames, trajectory, config);
    config.distance_um = af.distance_um;
    config.autofocus.reset();
  }

  ReconState<Scalar> state = initialize<Scalar>(frames, trajectory, config.upsampling);
  if (fixed_probe) {
    if (fixed_probe->rows() != state.probe.rows() || fixed_probe->cols() != state.probe.cols())
      throw ValidationError("reconstruct: fixed probe grid disagrees with the dataset");
    state.probe = *fixed_probe;
    config.fixed_probe = true;
  }

  ReconResult<Scalar> result = iterate(state, frames, trajectory, config);
  result.autofocus_curve = af.curve;
  result.autofocus_on_boundary = af.on_boundary;
  return result;
}

}  // namespace sptycho
