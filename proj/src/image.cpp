#include "advdn/image.hpp"

#include <algorithm>
#include <cmath>

#include "advdn/errors.hpp"

namespace advdn {

std::string to_string(const Shape& s) {
  return std::to_string(s.height) + "x" + std::to_string(s.width) + "x" +
         std::to_string(s.channels);
}

void validate_image_shape(const Shape& s) {
  if (s.height < 8 || s.width < 8)
    throw ParameterError("image must be at least 8x8, got " + to_string(s));
  if (s.channels != 1 && s.channels != 3)
    throw ParameterError("image must have 1 or 3 channels, got " + to_string(s));
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (!(a == b))
    throw ParameterError(std::string(what) + ": shape mismatch " + to_string(a) + " vs " +
                         to_string(b));
}

Image::Image(Shape shape, std::vector<double> pixels, std::string id)
    : shape_(shape), pixels_(std::move(pixels)), id_(std::move(id)) {
  validate_image_shape(shape_);
  if (pixels_.size() != shape_.size())
    throw ParameterError("pixel count " + std::to_string(pixels_.size()) +
                         " does not match shape " + to_string(shape_));
  for (double v : pixels_) {
    if (!(v >= 0.0 && v <= 1.0))
      throw ParameterError("pixel value " + std::to_string(v) + " outside [0, 1]");
  }
}

Image Image::filled(Shape shape, double value, std::string id) {
  return Image(shape, std::vector<double>(shape.size(), value), std::move(id));
}

Image Image::clipped(Shape shape, std::vector<double> values, std::string id) {
  for (double& v : values) v = std::clamp(v, 0.0, 1.0);
  return Image(shape, std::move(values), std::move(id));
}

Image Image::with_id(std::string id) const {
  Image copy = *this;
  copy.id_ = std::move(id);
  return copy;
}

Image Image::crop(int top, int left, int h, int w, std::string id) const {
  if (top < 0 || left < 0 || top + h > shape_.height || left + w > shape_.width)
    throw ParameterError("crop window outside image " + to_string(shape_));
  Shape out{h, w, shape_.channels};
  std::vector<double> px(out.size());
  for (int c = 0; c < shape_.channels; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        px[(static_cast<std::size_t>(c) * h + y) * w + x] = at(top + y, left + x, c);
  return Image(out, std::move(px), std::move(id));
}

NoiseField::NoiseField(Shape shape, std::vector<double> values)
    : shape_(shape), values_(std::move(values)) {
  if (values_.size() != shape_.size())
    throw ParameterError("noise field size does not match shape " + to_string(shape_));
}

NoiseField& NoiseField::operator+=(const NoiseField& other) {
  require_same_shape(shape_, other.shape_, "noise field sum");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

NoiseField& NoiseField::operator-=(const NoiseField& other) {
  require_same_shape(shape_, other.shape_, "noise field difference");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

NoiseField& NoiseField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

NoiseField operator+(NoiseField a, const NoiseField& b) { return a += b; }
NoiseField operator-(NoiseField a, const NoiseField& b) { return a -= b; }
NoiseField operator*(double s, NoiseField a) { return a *= s; }

double dot(const NoiseField& a, const NoiseField& b) {
  require_same_shape(a.shape(), b.shape(), "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double l2_norm(const NoiseField& a) { return std::sqrt(dot(a, a)); }

double linf_norm(const NoiseField& a) {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

double mean(const NoiseField& a) {
  if (a.size() == 0) return 0.0;
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  return acc / static_cast<double>(a.size());
}

double stddev(const NoiseField& a) {
  if (a.size() == 0) return 0.0;
  const double m = mean(a);
  double acc = 0.0;
  for (double v : a.values()) acc += (v - m) * (v - m);
  return std::sqrt(acc / static_cast<double>(a.size()));
}

NoiseField difference(const Image& a, const Image& b) {
  require_same_shape(a.shape(), b.shape(), "difference");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return NoiseField(a.shape(), std::move(out));
}

Image compose(const Image& base, const NoiseField& offset, std::string id) {
  require_same_shape(base.shape(), offset.shape(), "compose");
  std::vector<double> out(base.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = base[i] + offset[i];
  return Image::clipped(base.shape(), std::move(out), id.empty() ? base.id() : std::move(id));
}

}  // namespace advdn
