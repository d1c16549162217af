#include "omnifmi/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace omnifmi::fft {

namespace {

// FFTW's planner is not re-entrant, so plan creation is serialised. Plans are
// in-place and unaligned, which lets any buffer of the right size reuse them.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int w, int h, int sign) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(w, h, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    fftw_complex* buf = fftw_alloc_complex(static_cast<size_t>(w) * h);
    fftw_plan p = fftw_plan_dft_2d(h, w, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    plans_.emplace(key, p);
    return p;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

void run(ComplexGrid& g, int sign) {
  if (g.empty()) return;
  fftw_plan p = cache().get(g.width, g.height, sign);
  auto* data = reinterpret_cast<fftw_complex*>(g.data.data());
  fftw_execute_dft(p, data, data);
}

}  // namespace

void forward(ComplexGrid& g) { run(g, FFTW_FORWARD); }

void inverse(ComplexGrid& g) {
  run(g, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(g.size());
  for (auto& v : g.data) v *= scale;
}

ComplexGrid to_complex(const RealGrid& g) {
  ComplexGrid out(g.width, g.height);
  for (size_t i = 0; i < g.size(); ++i) out.data[i] = g.data[i];
  return out;
}

}  // namespace omnifmi::fft
