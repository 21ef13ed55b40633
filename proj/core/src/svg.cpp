#include "quadopt/svg.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "quadopt/errors.hpp"

namespace quadopt {

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 400;
constexpr double kLeft = 70;
constexpr double kRight = 20;
constexpr double kTop = 40;
constexpr double kBottom = 50;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Comments must not contain "--".
std::string comment_safe(std::string_view s) {
  std::string out(s);
  for (std::size_t p; (p = out.find("--")) != std::string::npos;) out.replace(p, 2, "- -");
  return out;
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const {
    return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom);
  }
};

void pad_range(double& lo, double& hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    lo = 0;
    hi = 1;
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  } else {
    const double m = 0.05 * (hi - lo);
    lo -= m;
    hi += m;
  }
}

void header(std::ostringstream& os, std::string_view title) {
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
     << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
     << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" fill=\"white\"/>\n"
     << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
     << escape(title) << "</text>\n";
}

void axes(std::ostringstream& os, const Frame& f, std::string_view x_label,
          std::string_view y_label, bool x_ticks) {
  const double left = kLeft, right = kWidth - kRight;
  const double top = kTop, bottom = kHeight - kBottom;
  os << "<g stroke=\"black\" fill=\"none\">\n"
     << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\""
     << bottom << "\"/>\n"
     << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << bottom
     << "\"/>\n</g>\n<g font-size=\"11\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = f.y0 + (f.y1 - f.y0) * i / 4.0;
    os << "<text x=\"" << left - 6 << "\" y=\"" << num(f.py(y) + 4)
       << "\" text-anchor=\"end\">" << num(y) << "</text>\n";
    if (x_ticks) {
      const double x = f.x0 + (f.x1 - f.x0) * i / 4.0;
      os << "<text x=\"" << num(f.px(x)) << "\" y=\"" << bottom + 16
         << "\" text-anchor=\"middle\">" << num(x) << "</text>\n";
    }
  }
  os << "</g>\n<text x=\"" << (left + right) / 2 << "\" y=\"" << kHeight - 10
     << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(x_label) << "</text>\n"
     << "<text x=\"16\" y=\"" << (top + bottom) / 2 << "\" text-anchor=\"middle\" font-size=\"13\""
     << " transform=\"rotate(-90 16 " << (top + bottom) / 2 << ")\">" << escape(y_label)
     << "</text>\n";
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  return i + 1 < v.size() ? v[i] * (1 - frac) + v[i + 1] * frac : v[i];
}

}  // namespace

std::string line_plot_svg(std::string_view title, std::string_view x_label,
                          std::string_view y_label, std::span<const Series> series,
                          double x_max) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw DimensionMismatchError("series x/y length mismatch");
    for (double y : s.y) {
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }
  }
  pad_range(lo, hi);
  const Frame f{0.0, x_max > 0 ? x_max : 1.0, lo, hi};

  std::ostringstream os;
  header(os, title);
  os << "<!-- data\n";
  for (const auto& s : series) {
    os << "series " << comment_safe(s.name) << '\n';
    for (std::size_t i = 0; i < s.x.size(); ++i) os << num(s.x[i]) << ',' << num(s.y[i]) << '\n';
  }
  os << "x_max " << num(f.x1) << "\n-->\n";
  axes(os, f, x_label, y_label, true);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      os << (i ? " " : "") << num(f.px(s.x[i])) << ',' << num(f.py(s.y[i]));
    }
    os << "\"><title>" << escape(s.name) << "</title></polyline>\n";
    os << "<text x=\"" << kWidth - kRight - 4 << "\" y=\"" << kTop + 14 * (k + 1)
       << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << color << "\">" << escape(s.name)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string box_plot_svg(std::string_view title, std::string_view y_label,
                         std::span<const std::string> labels,
                         std::span<const std::vector<double>> groups) {
  if (labels.size() != groups.size()) throw DimensionMismatchError("one label per group");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& g : groups) {
    for (double v : g) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  pad_range(lo, hi);
  const double n = static_cast<double>(std::max<std::size_t>(groups.size(), 1));
  const Frame f{0.0, n, lo, hi};

  std::ostringstream os;
  header(os, title);
  os << "<!-- data\n";
  for (std::size_t k = 0; k < groups.size(); ++k) {
    os << comment_safe(labels[k]);
    for (double v : groups[k]) os << ',' << num(v);
    os << '\n';
  }
  os << "-->\n";
  axes(os, f, "", y_label, false);
  for (std::size_t k = 0; k < groups.size(); ++k) {
    const double cx = f.px(static_cast<double>(k) + 0.5);
    const double half = 0.25 * (f.px(1) - f.px(0));
    const char* color = kPalette[k % std::size(kPalette)];
    os << "<text x=\"" << num(cx) << "\" y=\"" << kHeight - kBottom + 16
       << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(labels[k]) << "</text>\n";
    if (groups[k].empty()) continue;
    const auto& g = groups[k];
    const double q1 = quantile(g, 0.25), q2 = quantile(g, 0.5), q3 = quantile(g, 0.75);
    const double mn = *std::min_element(g.begin(), g.end());
    const double mx = *std::max_element(g.begin(), g.end());
    os << "<g stroke=\"" << color << "\" fill=\"none\" stroke-width=\"1.5\">\n"
       << "<line x1=\"" << num(cx) << "\" y1=\"" << num(f.py(mn)) << "\" x2=\"" << num(cx)
       << "\" y2=\"" << num(f.py(q1)) << "\"/>\n"
       << "<line x1=\"" << num(cx) << "\" y1=\"" << num(f.py(q3)) << "\" x2=\"" << num(cx)
       << "\" y2=\"" << num(f.py(mx)) << "\"/>\n"
       << "<rect x=\"" << num(cx - half) << "\" y=\"" << num(f.py(q3)) << "\" width=\""
       << num(2 * half) << "\" height=\"" << num(f.py(q1) - f.py(q3)) << "\"/>\n"
       << "<line x1=\"" << num(cx - half) << "\" y1=\"" << num(f.py(q2)) << "\" x2=\""
       << num(cx + half) << "\" y2=\"" << num(f.py(q2)) << "\" stroke-width=\"2.5\"/>\n"
       << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

bool svg_well_formed(std::string_view text, std::string* why) {
  auto fail = [&](std::string msg, std::size_t at) {
    if (why) *why = msg + " at offset " + std::to_string(at);
    return false;
  };
  std::vector<std::string> stack;
  bool root_seen = false;
  std::size_t i = 0;
  const auto is_name = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':' ||
           c == '.';
  };
  while (i < text.size()) {
    if (text[i] != '<') {
      if (stack.empty() && !std::isspace(static_cast<unsigned char>(text[i]))) {
        return fail("text outside the root element", i);
      }
      ++i;
      continue;
    }
    if (text.substr(i, 4) == "<!--") {
      const auto end = text.find("-->", i + 4);
      if (end == std::string_view::npos) return fail("unterminated comment", i);
      if (text.substr(i + 4, end - i - 4).find("--") != std::string_view::npos) {
        return fail("'--' inside comment", i);
      }
      i = end + 3;
      continue;
    }
    if (text.substr(i, 2) == "<?") {
      const auto end = text.find("?>", i);
      if (end == std::string_view::npos) return fail("unterminated declaration", i);
      i = end + 2;
      continue;
    }
    const bool closing = i + 1 < text.size() && text[i + 1] == '/';
    std::size_t p = i + (closing ? 2 : 1);
    const std::size_t name_start = p;
    while (p < text.size() && is_name(text[p])) ++p;
    const std::string name(text.substr(name_start, p - name_start));
    if (name.empty()) return fail("missing tag name", i);
    if (closing) {
      while (p < text.size() && std::isspace(static_cast<unsigned char>(text[p]))) ++p;
      if (p >= text.size() || text[p] != '>') return fail("malformed closing tag", i);
      if (stack.empty() || stack.back() != name) return fail("mismatched </" + name + ">", i);
      stack.pop_back();
      i = p + 1;
      continue;
    }
    if (stack.empty()) {
      if (root_seen) return fail("second root element", i);
      if (name != "svg") return fail("root element is not <svg>", i);
      root_seen = true;
    }
    bool self_closing = false;
    while (true) {
      while (p < text.size() && std::isspace(static_cast<unsigned char>(text[p]))) ++p;
      if (p >= text.size()) return fail("unterminated tag", i);
      if (text[p] == '>') {
        ++p;
        break;
      }
      if (text[p] == '/') {
        if (p + 1 >= text.size() || text[p + 1] != '>') return fail("stray '/'", p);
        self_closing = true;
        p += 2;
        break;
      }
      const std::size_t attr = p;
      while (p < text.size() && is_name(text[p])) ++p;
      if (p == attr) return fail("bad attribute name", p);
      if (p >= text.size() || text[p] != '=') return fail("attribute without value", p);
      ++p;
      if (p >= text.size() || (text[p] != '"' && text[p] != '\'')) {
        return fail("unquoted attribute", p);
      }
      const auto close = text.find(text[p], p + 1);
      if (close == std::string_view::npos) return fail("unterminated attribute", p);
      if (text.substr(p + 1, close - p - 1).find('<') != std::string_view::npos) {
        return fail("'<' inside attribute", p);
      }
      p = close + 1;
    }
    if (!self_closing) stack.push_back(name);
    i = p;
  }
  if (!root_seen) return fail("no <svg> element", 0);
  if (!stack.empty()) return fail("unclosed <" + stack.back() + ">", text.size());
  return true;
}

}  // namespace quadopt
