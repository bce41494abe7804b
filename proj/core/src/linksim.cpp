#include "mwrn/linksim.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

#include "mwrn/protocol.hpp"

namespace mwrn {

namespace {

int gray_decode(int g) {
  int b = g;
  while (g >>= 1) b ^= g;
  return b;
}

int int_sqrt(int v) {
  int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(v))));
  while (r * r > v) --r;
  while ((r + 1) * (r + 1) <= v) ++r;
  return r;
}

}  // namespace

QamConstellation::QamConstellation(int order) : order_(order) {
  levels_ = int_sqrt(order);
  if (levels_ * levels_ != order || levels_ < 2 || (levels_ & (levels_ - 1)) != 0) {
    throw std::invalid_argument("QAM order must be a square power of two");
  }
  bits_ = 0;
  for (int v = order; v > 1; v >>= 1) ++bits_;
  // Average energy of the square grid {±d, ±3d, ...}^2 is 2 d^2 (L^2-1)/3.
  spacing_ = std::sqrt(3.0 / (2.0 * (levels_ * levels_ - 1)));
  points_.resize(order);
  const int axis_bits = bits_ / 2;
  for (int label = 0; label < order; ++label) {
    const int gi = label >> axis_bits;
    const int gq = label & ((1 << axis_bits) - 1);
    const int li = gray_decode(gi);
    const int lq = gray_decode(gq);
    points_[label] = Complex((2 * li - levels_ + 1) * spacing_,
                             (2 * lq - levels_ + 1) * spacing_);
  }
}

Complex QamConstellation::map(int label) const {
  if (label < 0 || label >= order_) {
    throw std::out_of_range("QAM label out of range");
  }
  return points_[label];
}

int QamConstellation::demap(Complex y) const {
  const auto slice = [&](double v) {
    int level = static_cast<int>(std::lround((v / spacing_ + levels_ - 1) / 2.0));
    return std::min(std::max(level, 0), levels_ - 1);
  };
  const int li = slice(y.real());
  const int lq = slice(y.imag());
  const int axis_bits = bits_ / 2;
  return ((li ^ (li >> 1)) << axis_bits) | (lq ^ (lq >> 1));
}

BlockOutcome simulate_block(const CMatrix& h, const BeamformerSet& beamformers,
                            const NetworkConfig& config, Rng& rng,
                            CancellationMode mode, const QamConstellation& qam,
                            double noise_scale) {
  const int n_users = config.n_users();
  const int m = config.m_antennas();
  if (beamformers.n_slots() != n_users - 1) {
    throw std::invalid_argument("simulate_block: need N-1 beamformers");
  }

  std::vector<int> true_labels(n_users);
  CVector symbols(n_users);
  for (int i = 0; i < n_users; ++i) {
    true_labels[i] = static_cast<int>(rng.below(qam.order()));
    symbols(i) = std::sqrt(config.user_power(i + 1)) * qam.map(true_labels[i]);
  }

  // decisions[k-1][j-1]: label receiver k has decided for source j
  std::vector<std::vector<int>> decisions(n_users, std::vector<int>(n_users, -1));
  const auto schedule = DetectionSchedule::from_config(config);

  BlockOutcome out;
  out.user_events.assign(n_users, 0);
  out.user_errors.assign(n_users, 0);

  CVector relay_noise(m), user_noise(n_users);
  for (int n = 1; n <= n_users - 1; ++n) {
    for (int a = 0; a < m; ++a) relay_noise(a) = noise_scale * rng.cgaussian(1.0);
    for (int u = 0; u < n_users; ++u) user_noise(u) = noise_scale * rng.cgaussian(1.0);

    const CMatrix& g = beamformers.slot(n);
    const CMatrix effective = h.transpose() * g * h;  // A^{(n)} seen end to end
    const CVector received =
        effective * symbols + h.transpose() * (g * relay_noise) + user_noise;

    for (int k = 1; k <= n_users; ++k) {
      const int i = schedule.target(k, n);
      Complex r = received(k - 1);
      // Self-interference always cancels with the true own symbol; decoded
      // symbols cancel with decisions or, genie-aided, the true symbols.
      r -= effective(k - 1, k - 1) * symbols(k - 1);
      for (int j : schedule.decoded_before(k, n)) {
        Complex s_hat;
        if (mode == CancellationMode::GenieAided) {
          s_hat = symbols(j - 1);
        } else {
          s_hat = std::sqrt(config.user_power(j)) * qam.map(decisions[k - 1][j - 1]);
        }
        r -= effective(k - 1, j - 1) * s_hat;
      }

      const Complex gain =
          effective(k - 1, i - 1) * std::sqrt(config.user_power(i));
      int decided;
      if (gain == Complex(0.0, 0.0)) {
        decided = -1;  // erasure, counted as an error
      } else {
        decided = qam.demap(r / gain);
      }
      decisions[k - 1][i - 1] = decided < 0 ? 0 : decided;
      out.user_events[k - 1] += 1;
      out.events += 1;
      if (decided != true_labels[i - 1]) {
        out.user_errors[k - 1] += 1;
        out.errors += 1;
      }
    }
  }
  return out;
}

SerResult simulate_ser(const NetworkConfig& config, const BeamformerFactory& factory,
                       long trials, std::uint64_t master_seed, CancellationMode mode,
                       const QamConstellation& qam, int threads) {
  if (trials < 1) throw std::invalid_argument("simulate_ser: trials must be >= 1");
  const int n_users = config.n_users();

  struct TrialOutcome {
    BlockOutcome block;
    bool failed = false;
  };
  std::vector<TrialOutcome> outcomes(trials);

  const auto run_range = [&](long begin, long end) {
    for (long t = begin; t < end; ++t) {
      Rng rng(Rng::derive_seed(master_seed, static_cast<std::uint64_t>(t)));
      const CMatrix h = generate_channel(config, rng);
      try {
        const BeamformerSet set = factory(h, config);
        outcomes[t].block = simulate_block(h, set, config, rng, mode, qam);
      } catch (const std::exception&) {
        outcomes[t].failed = true;
      }
    }
  };

  if (threads <= 1 || trials < 2 * threads) {
    run_range(0, trials);
  } else {
    std::vector<std::thread> pool;
    const long chunk = (trials + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      const long begin = w * chunk;
      const long end = std::min(trials, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(run_range, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  SerResult result;
  result.mode = mode;
  result.trials = trials;
  std::vector<long> user_events(n_users, 0), user_errors(n_users, 0);
  for (const auto& o : outcomes) {
    if (o.failed) {
      result.failures += 1;
      continue;
    }
    result.events += o.block.events;
    result.errors += o.block.errors;
    const double block_ser =
        o.block.events > 0 ? static_cast<double>(o.block.errors) / o.block.events : 0.0;
    result.block_ser_sum += block_ser;
    result.block_ser_sumsq += block_ser * block_ser;
    for (int u = 0; u < n_users; ++u) {
      user_events[u] += o.block.user_events[u];
      user_errors[u] += o.block.user_errors[u];
    }
  }
  result.per_user_ser.resize(n_users);
  for (int u = 0; u < n_users; ++u) {
    result.per_user_ser[u] =
        user_events[u] > 0 ? static_cast<double>(user_errors[u]) / user_events[u] : 0.0;
  }
  result.aggregate_ser =
      result.events > 0 ? static_cast<double>(result.errors) / result.events : 0.0;
  return result;
}

std::vector<SerResult> simulate_ser_sweep(const NetworkConfig& config,
                                          const BeamformerFactory& factory,
                                          const std::vector<double>& snr_grid_db,
                                          long trials, std::uint64_t master_seed,
                                          CancellationMode mode,
                                          const QamConstellation& qam, int threads) {
  std::vector<SerResult> results;
  results.reserve(snr_grid_db.size());
  for (std::size_t p = 0; p < snr_grid_db.size(); ++p) {
    const double snr_linear = std::pow(10.0, snr_grid_db[p] / 10.0);
    const NetworkConfig point = config.with_channel_model(
        config.channel_model().with_reference_snr(snr_linear));
    results.push_back(simulate_ser(point, factory, trials,
                                   Rng::derive_seed(master_seed, 1000003 + p), mode,
                                   qam, threads));
  }
  return results;
}

}  // namespace mwrn
