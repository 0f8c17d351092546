#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace switchctl {

/// One mode of a switched plant: the pair (A, B) with A n-by-n and B n-by-m.
struct Mode {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
};

/// A word over the mode alphabet {1, ..., M}. The empty word is epsilon.
struct Word {
  std::vector<int> symbols;

  Word() = default;
  explicit Word(std::vector<int> s) : symbols(std::move(s)) {}

  static Word epsilon() { return Word{}; }

  int length() const { return static_cast<int>(symbols.size()); }
  bool empty() const { return symbols.empty(); }

  /// Concatenation (w, v).
  Word append(int symbol) const {
    Word out = *this;
    out.symbols.push_back(symbol);
    return out;
  }

  friend bool operator==(const Word&, const Word&) = default;
  // Lexicographic; graph builders additionally order by length where needed.
  friend auto operator<=>(const Word& a, const Word& b) { return a.symbols <=> b.symbols; }
};

/// Word rendered as a digit string ("" for epsilon). Valid for alphabets up to 9.
inline std::string word_to_string(const Word& w) {
  std::string s;
  s.reserve(w.symbols.size());
  for (int c : w.symbols) s += static_cast<char>('0' + c);
  return s;
}

inline Word parse_word(const std::string& s) {
  Word w;
  w.symbols.reserve(s.size());
  for (char c : s) {
    if (c < '1' || c > '9') throw std::invalid_argument("word string must contain digits 1-9, got '" + s + "'");
    w.symbols.push_back(c - '0');
  }
  return w;
}

/// A finite prefix of a switching signal; values are modes in {1, ..., M}.
struct SwitchingSignal {
  std::vector<int> values;

  SwitchingSignal() = default;
  explicit SwitchingSignal(std::vector<int> v) : values(std::move(v)) {}

  int length() const { return static_cast<int>(values.size()); }
  int operator()(int k) const { return values.at(static_cast<std::size_t>(k)); }

  friend bool operator==(const SwitchingSignal&, const SwitchingSignal&) = default;
};

/// State-dependent disturbance model: both injected disturbances are drawn
/// from balls of radius rho(x) = rho_scale * |x|. rho_scale = 0 is the
/// nominal closed loop.
struct PerturbationModel {
  double rho_scale = 0.0;
  std::uint64_t rng_seed = 0;
};

namespace limits {
inline constexpr int kMaxStateDim = 20;
inline constexpr int kMaxModes = 8;
inline constexpr std::size_t kDefaultNodeCap = 100000;
}  // namespace limits

/// Discrete-time switched linear plant x(k+1) = A_i x(k) + B_i u(k), where the
/// active mode i in {1, ..., M} is chosen by an external signal.
class SwitchedSystem {
 public:
  explicit SwitchedSystem(std::vector<Mode> modes) : modes_(std::move(modes)) {
    if (modes_.empty()) throw std::invalid_argument("switched system needs at least one mode");
    if (static_cast<int>(modes_.size()) > limits::kMaxModes)
      throw std::invalid_argument("at most " + std::to_string(limits::kMaxModes) + " modes supported");
    n_ = static_cast<int>(modes_[0].A.rows());
    m_ = static_cast<int>(modes_[0].B.cols());
    if (n_ < 1) throw std::invalid_argument("state dimension must be positive");
    if (m_ < 1) throw std::invalid_argument("input dimension must be positive");
    if (n_ > limits::kMaxStateDim)
      throw std::invalid_argument("state dimension above supported envelope (" +
                                  std::to_string(limits::kMaxStateDim) + ")");
    for (std::size_t i = 0; i < modes_.size(); ++i) {
      const Mode& md = modes_[i];
      const std::string tag = "mode " + std::to_string(i + 1);
      if (md.A.rows() != n_ || md.A.cols() != n_)
        throw std::invalid_argument(tag + ": A must be " + std::to_string(n_) + "x" + std::to_string(n_));
      if (md.B.rows() != n_ || md.B.cols() != m_)
        throw std::invalid_argument(tag + ": B must be " + std::to_string(n_) + "x" + std::to_string(m_));
      if (!md.A.allFinite() || !md.B.allFinite())
        throw std::invalid_argument(tag + ": non-finite matrix entry");
    }
  }

  int state_dim() const { return n_; }
  int input_dim() const { return m_; }
  int num_modes() const { return static_cast<int>(modes_.size()); }

  /// 1-based mode access, matching the alphabet {1, ..., M}.
  const Mode& mode(int i) const {
    if (i < 1 || i > num_modes()) throw std::invalid_argument("mode index out of range: " + std::to_string(i));
    return modes_[static_cast<std::size_t>(i - 1)];
  }

  const std::vector<Mode>& modes() const { return modes_; }

  double max_spectral_norm() const {
    double best = 0.0;
    for (const Mode& md : modes_) {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(md.A);
      best = std::max(best, svd.singularValues()(0));
    }
    return best;
  }

 private:
  int n_ = 0;
  int m_ = 0;
  std::vector<Mode> modes_;
};

/// The rate-scaled family {(A_i / gamma, B_i / gamma)}. Feasibility of the
/// synthesis conditions for the scaled family certifies growth rate gamma for
/// the original plant.
inline SwitchedSystem scale_system(const SwitchedSystem& sys, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw std::invalid_argument("gamma must be a positive finite real");
  std::vector<Mode> scaled;
  scaled.reserve(static_cast<std::size_t>(sys.num_modes()));
  for (const Mode& md : sys.modes()) scaled.push_back(Mode{md.A / gamma, md.B / gamma});
  return SwitchedSystem(std::move(scaled));
}

/// Restriction of sigma to [a, b]; a = b + 1 yields the empty word.
inline Word restrict_signal(const SwitchingSignal& sigma, int a, int b) {
  if (a < 0 || b >= sigma.length() || a > b + 1)
    throw std::invalid_argument("signal restriction indices out of range: [" + std::to_string(a) + "," +
                                std::to_string(b) + "] with length " + std::to_string(sigma.length()));
  Word w;
  w.symbols.assign(sigma.values.begin() + a, sigma.values.begin() + (b + 1));
  return w;
}

inline void validate_signal(const SwitchingSignal& sigma, int num_modes) {
  for (int v : sigma.values)
    if (v < 1 || v > num_modes)
      throw std::invalid_argument("signal value " + std::to_string(v) + " outside alphabet 1.." +
                                  std::to_string(num_modes));
}

}  // namespace switchctl
