#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace swave {

// Scalar Lipschitz function with its derivative.
class Coefficient {
 public:
  enum class Kind { zero, constant, linear, sine, cosine, affine, table };

  static Coefficient zero() { return Coefficient(Kind::zero, 0.0, 0.0); }
  static Coefficient constant(double c) { return Coefficient(Kind::constant, c, 0.0); }
  static Coefficient linear(double slope) { return Coefficient(Kind::linear, slope, 0.0); }
  // amplitude * sin(v) and amplitude * cos(v).
  static Coefficient sine(double amplitude = 1.0) {
    return Coefficient(Kind::sine, amplitude, 0.0);
  }
  static Coefficient cosine(double amplitude = 1.0) {
    return Coefficient(Kind::cosine, amplitude, 0.0);
  }
  // slope * v + offset.
  static Coefficient affine(double slope, double offset) {
    return Coefficient(Kind::affine, slope, offset);
  }
  // Piecewise linear through (knots, values), extended linearly past the ends.
  static Coefficient table(std::vector<double> knots, std::vector<double> values) {
    if (knots.size() < 2 || knots.size() != values.size())
      throw std::invalid_argument("table coefficient needs >= 2 matching knots and values");
    for (std::size_t i = 1; i < knots.size(); ++i)
      if (!(knots[i] > knots[i - 1]))
        throw std::invalid_argument("table knots must be strictly increasing");
    for (double v : values)
      if (!std::isfinite(v)) throw std::invalid_argument("table values must be finite");
    Coefficient c(Kind::table, 0.0, 0.0);
    c.knots_ = std::move(knots);
    c.values_ = std::move(values);
    return c;
  }

  Kind kind() const noexcept { return kind_; }
  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }

  double operator()(double v) const {
    switch (kind_) {
      case Kind::zero: return 0.0;
      case Kind::constant: return a_;
      case Kind::linear: return a_ * v;
      case Kind::sine: return a_ * std::sin(v);
      case Kind::cosine: return a_ * std::cos(v);
      case Kind::affine: return a_ * v + b_;
      case Kind::table: {
        std::size_t i = segment(v);
        double s = (values_[i + 1] - values_[i]) / (knots_[i + 1] - knots_[i]);
        return values_[i] + s * (v - knots_[i]);
      }
    }
    return 0.0;
  }

  double derivative(double v) const {
    switch (kind_) {
      case Kind::zero:
      case Kind::constant: return 0.0;
      case Kind::linear: return a_;
      case Kind::sine: return a_ * std::cos(v);
      case Kind::cosine: return -a_ * std::sin(v);
      case Kind::affine: return a_;
      case Kind::table: {
        std::size_t i = segment(v);
        return (values_[i + 1] - values_[i]) / (knots_[i + 1] - knots_[i]);
      }
    }
    return 0.0;
  }

  double lipschitz() const {
    switch (kind_) {
      case Kind::zero:
      case Kind::constant: return 0.0;
      case Kind::linear:
      case Kind::sine:
      case Kind::cosine:
      case Kind::affine: return std::abs(a_);
      case Kind::table: {
        double l = 0.0;
        for (std::size_t i = 0; i + 1 < knots_.size(); ++i)
          l = std::max(l, std::abs((values_[i + 1] - values_[i]) / (knots_[i + 1] - knots_[i])));
        return l;
      }
    }
    return 0.0;
  }

  bool is_constant() const noexcept {
    return kind_ == Kind::zero || kind_ == Kind::constant ||
           (kind_ == Kind::linear && a_ == 0.0) || (kind_ == Kind::affine && a_ == 0.0) ||
           ((kind_ == Kind::sine || kind_ == Kind::cosine) && a_ == 0.0);
  }
  bool is_zero() const noexcept { return is_constant() && (*this)(0.0) == 0.0; }

  Coefficient scaled(double c) const {
    Coefficient out = *this;
    out.a_ *= c;
    out.b_ *= c;
    if (kind_ == Kind::zero) return out;
    for (double& v : out.values_) v *= c;
    return out;
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind_) {
      case Kind::zero: os << "zero"; break;
      case Kind::constant: os << "const(" << a_ << ")"; break;
      case Kind::linear: os << "linear(" << a_ << ")"; break;
      case Kind::sine: os << "sin(" << a_ << ")"; break;
      case Kind::cosine: os << "cos(" << a_ << ")"; break;
      case Kind::affine: os << "affine(" << a_ << "," << b_ << ")"; break;
      case Kind::table:
        os << "table(";
        for (std::size_t i = 0; i < knots_.size(); ++i)
          os << (i ? ";" : "") << knots_[i] << ":" << values_[i];
        os << ")";
        break;
    }
    return os.str();
  }

 private:
  Coefficient(Kind k, double a, double b) : kind_(k), a_(a), b_(b) {
    if (!std::isfinite(a) || !std::isfinite(b))
      throw std::invalid_argument("coefficient parameters must be finite");
  }

  std::size_t segment(double v) const {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), v);
    std::size_t i = it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
    return std::min(i, knots_.size() - 2);
  }

  Kind kind_;
  double a_, b_;
  std::vector<double> knots_, values_;
};

// Parses registry names: zero, const:c, linear:l, sin[:a], cos[:a],
// affine:a,b, table:x0:y0;x1:y1;...
inline Coefficient parse_coefficient(const std::string& text) {
  auto colon = text.find(':');
  std::string name = text.substr(0, colon);
  std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty())
      throw std::invalid_argument("coefficient '" + text + "': bad number '" + s + "'");
    return v;
  };
  if (name == "zero" && arg.empty()) return Coefficient::zero();
  if (name == "const") return Coefficient::constant(number(arg));
  if (name == "linear") return Coefficient::linear(number(arg));
  if (name == "sin") return Coefficient::sine(arg.empty() ? 1.0 : number(arg));
  if (name == "cos") return Coefficient::cosine(arg.empty() ? 1.0 : number(arg));
  if (name == "affine") {
    auto comma = arg.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("coefficient '" + text + "': affine needs slope,offset");
    return Coefficient::affine(number(arg.substr(0, comma)), number(arg.substr(comma + 1)));
  }
  if (name == "table") {
    std::vector<double> xs, ys;
    std::stringstream ss(arg);
    std::string pair;
    while (std::getline(ss, pair, ';')) {
      auto c = pair.find(':');
      if (c == std::string::npos)
        throw std::invalid_argument("coefficient '" + text + "': table entries are x:y");
      xs.push_back(number(pair.substr(0, c)));
      ys.push_back(number(pair.substr(c + 1)));
    }
    return Coefficient::table(xs, ys);
  }
  throw std::invalid_argument("unknown coefficient '" + text +
                              "' (expected zero, const:c, linear:l, sin[:a], cos[:a], "
                              "affine:a,b or table:x:y;...)");
}

// Diffusion sigma and drift b of the equation.
struct Coefficients {
  Coefficient sigma = Coefficient::constant(1.0);
  Coefficient drift = Coefficient::zero();

  bool additive() const noexcept { return sigma.is_constant(); }
};

}  // namespace swave
