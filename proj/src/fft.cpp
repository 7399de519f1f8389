#include "sptycho/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace sptycho {
namespace fft {

namespace {

Planning g_planning = Planning::deterministic;

// Column-major (rows, cols) data seen by FFTW as a row-major cols x rows
// array; the 2D transform is separable so both axes are transformed either
// way, only the frequency layout transposes with the data, consistently.
struct PlanKey {
  int n0 = 0, n1 = 0;
  int sign = 0;
  bool inplace = false;
  bool single = false;
  int align_in = 0, align_out = 0;
  auto operator<=>(const PlanKey&) const = default;
};

std::mutex g_mutex;
std::map<PlanKey, void*> g_plans;

unsigned flags_for(Planning p) {
  return p == Planning::measured ? FFTW_MEASURE : FFTW_ESTIMATE;
}

// Plans are created on scratch buffers (measured planning clobbers its
// arrays) and executed on caller arrays via the new-array interface, which
// requires matching alignment classes; the key tracks those.
template <typename T>
struct Backend;

template <>
struct Backend<double> {
  using c = fftw_complex;
  static void* plan(int n0, int n1, c* in, c* out, int sign, unsigned flags) {
    return fftw_plan_dft_2d(n0, n1, in, out, sign, flags);
  }
  static void execute(void* p, c* in, c* out) { fftw_execute_dft(static_cast<fftw_plan>(p), in, out); }
  static void* alloc(size_t n) { return fftw_malloc(sizeof(c) * n); }
  static void free(void* p) { fftw_free(p); }
  static int alignment(void* p) { return fftw_alignment_of(static_cast<double*>(p)); }
};

template <>
struct Backend<float> {
  using c = fftwf_complex;
  static void* plan(int n0, int n1, c* in, c* out, int sign, unsigned flags) {
    return fftwf_plan_dft_2d(n0, n1, in, out, sign, flags);
  }
  static void execute(void* p, c* in, c* out) { fftwf_execute_dft(static_cast<fftwf_plan>(p), in, out); }
  static void* alloc(size_t n) { return fftwf_malloc(sizeof(c) * n); }
  static void free(void* p) { fftwf_free(p); }
  static int alignment(void* p) { return fftwf_alignment_of(static_cast<float*>(p)); }
};

template <typename T>
void run(const std::complex<T>* in, std::complex<T>* out, Index rows, Index cols, bool inverse) {
  using B = Backend<T>;
  using C = typename B::c;
  auto* pin = const_cast<C*>(reinterpret_cast<const C*>(in));
  auto* pout = reinterpret_cast<C*>(out);

  PlanKey key;
  key.n0 = static_cast<int>(cols);
  key.n1 = static_cast<int>(rows);
  key.sign = inverse ? FFTW_BACKWARD : FFTW_FORWARD;
  key.inplace = (in == out);
  key.single = std::is_same_v<T, float>;
  key.align_in = B::alignment(pin);
  key.align_out = B::alignment(pout);

  void* plan = nullptr;
  {
    std::scoped_lock lock(g_mutex);
    auto it = g_plans.find(key);
    if (it != g_plans.end()) {
      plan = it->second;
    } else {
      const size_t n = static_cast<size_t>(rows) * static_cast<size_t>(cols);
      C* sin = static_cast<C*>(B::alloc(n));
      C* sout = key.inplace ? sin : static_cast<C*>(B::alloc(n));
      unsigned flags = flags_for(g_planning);
      if (B::alignment(reinterpret_cast<void*>(sin)) != key.align_in ||
          B::alignment(reinterpret_cast<void*>(sout)) != key.align_out) {
        flags |= FFTW_UNALIGNED;
      }
      plan = B::plan(key.n0, key.n1, sin, sout, key.sign, flags);
      if (!key.inplace) B::free(sout);
      B::free(sin);
      if (!plan) throw NumericalError("fft: planner failed");
      g_plans.emplace(key, plan);
    }
  }
  B::execute(plan, pin, pout);
}

}  // namespace

void set_planning(Planning p) {
  std::scoped_lock lock(g_mutex);
  g_planning = p;
}

Planning planning() {
  std::scoped_lock lock(g_mutex);
  return g_planning;
}

// Each precision keeps its own wisdom file: <path> and <path>.f.
bool import_wisdom(const std::string& path) {
  std::scoped_lock lock(g_mutex);
  const bool a = fftw_import_wisdom_from_filename(path.c_str()) != 0;
  const bool b = fftwf_import_wisdom_from_filename((path + ".f").c_str()) != 0;
  return a || b;
}

bool export_wisdom(const std::string& path) {
  std::scoped_lock lock(g_mutex);
  const bool a = fftw_export_wisdom_to_filename(path.c_str()) != 0;
  const bool b = fftwf_export_wisdom_to_filename((path + ".f").c_str()) != 0;
  return a && b;
}

void transform2d(ComplexArray<double>& inout, bool inverse) {
  run(inout.data(), inout.data(), inout.rows(), inout.cols(), inverse);
}

void transform2d(ComplexArray<float>& inout, bool inverse) {
  run(inout.data(), inout.data(), inout.rows(), inout.cols(), inverse);
}

void transform2d(const ComplexArray<double>& in, ComplexArray<double>& out, bool inverse) {
  out.resize(in.rows(), in.cols());
  run(in.data(), out.data(), in.rows(), in.cols(), inverse);
}

void transform2d(const ComplexArray<float>& in, ComplexArray<float>& out, bool inverse) {
  out.resize(in.rows(), in.cols());
  run(in.data(), out.data(), in.rows(), in.cols(), inverse);
}

}  // namespace fft
}  // namespace sptycho
