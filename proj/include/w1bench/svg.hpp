#pragma once

#include <string>

namespace w1bench::svg {

// Minimal static SVG writer: rectangles, lines, circles, text.
class Document {
 public:
  Document(double width, double height);

  void rect(double x, double y, double w, double h, const std::string& fill);
  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            double width = 1.0);
  void circle(double cx, double cy, double r, const std::string& fill);
  void text(double x, double y, const std::string& s, int font_size = 12);

  std::string str() const;
  void save(const std::string& path) const;

 private:
  double width_, height_;
  std::string body_;
};

// Dark-blue -> yellow ramp for t in [0, 1], as "#rrggbb".
std::string heat_color(double t);

}  // namespace w1bench::svg
