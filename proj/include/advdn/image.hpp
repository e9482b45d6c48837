#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace advdn {

/// Grid dimensions shared by images and noise fields.
struct Shape {
  int height = 0;
  int width = 0;
  int channels = 1;

  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  std::size_t size() const { return plane() * channels; }
  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& s);

/// Throws ParameterError unless H, W >= 8 and C is 1 or 3.
void validate_image_shape(const Shape& s);

class NoiseField;

/// Intensity grid on [0, 1], planar layout: index = (c * H + y) * W + x.
class Image {
 public:
  Image() = default;
  /// Validates the shape and that every value lies in [0, 1].
  Image(Shape shape, std::vector<double> pixels, std::string id = {});

  static Image filled(Shape shape, double value, std::string id = {});
  /// Clamps every value into [0, 1] before constructing.
  static Image clipped(Shape shape, std::vector<double> values, std::string id = {});

  const Shape& shape() const { return shape_; }
  int height() const { return shape_.height; }
  int width() const { return shape_.width; }
  int channels() const { return shape_.channels; }
  std::size_t size() const { return pixels_.size(); }

  std::span<const double> pixels() const { return pixels_; }
  double operator[](std::size_t i) const { return pixels_[i]; }
  double at(int y, int x, int c = 0) const {
    return pixels_[(static_cast<std::size_t>(c) * shape_.height + y) * shape_.width + x];
  }

  const std::string& id() const { return id_; }
  Image with_id(std::string id) const;

  /// Sub-window copy; the window must fit inside the image.
  Image crop(int top, int left, int height, int width, std::string id = {}) const;

 private:
  Shape shape_;
  std::vector<double> pixels_;
  std::string id_;
};

/// Signed grid paired with an Image shape. No range restriction.
class NoiseField {
 public:
  NoiseField() = default;
  explicit NoiseField(Shape shape) : shape_(shape), values_(shape.size(), 0.0) {}
  NoiseField(Shape shape, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  NoiseField& operator+=(const NoiseField& other);
  NoiseField& operator-=(const NoiseField& other);
  NoiseField& operator*=(double s);

 private:
  Shape shape_;
  std::vector<double> values_;
};

NoiseField operator+(NoiseField a, const NoiseField& b);
NoiseField operator-(NoiseField a, const NoiseField& b);
NoiseField operator*(double s, NoiseField a);

/// Flat inner product over every pixel and channel.
double dot(const NoiseField& a, const NoiseField& b);
double l2_norm(const NoiseField& a);
double linf_norm(const NoiseField& a);
/// Population standard deviation of the field's values.
double stddev(const NoiseField& a);
double mean(const NoiseField& a);

/// a - b as a signed field.
NoiseField difference(const Image& a, const Image& b);
/// clip(base + offset, 0, 1).
Image compose(const Image& base, const NoiseField& offset, std::string id = {});

void require_same_shape(const Shape& a, const Shape& b, const char* what);

}  // namespace advdn
