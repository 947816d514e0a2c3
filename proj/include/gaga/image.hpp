#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "gaga/core/tensor.hpp"

namespace gaga {

// RGB image, float values in [0,1], planar channel-major storage so it
// maps directly onto a (1,3,H,W) tensor.
struct Image {
  int64_t height = 0;
  int64_t width = 0;
  std::vector<float> data;  // 3*H*W

  Image() = default;
  Image(int64_t h, int64_t w, float fill = 0.f)
      : height(h), width(w), data(static_cast<size_t>(3 * h * w), fill) {}

  float& at(int64_t c, int64_t y, int64_t x) {
    return data[static_cast<size_t>((c * height + y) * width + x)];
  }
  float at(int64_t c, int64_t y, int64_t x) const {
    return data[static_cast<size_t>((c * height + y) * width + x)];
  }

  bool same_size(const Image& o) const { return height == o.height && width == o.width; }

  template <typename T>
  Tensor<T> to_tensor() const {
    Tensor<T> t({1, 3, height, width});
    for (size_t i = 0; i < data.size(); ++i) t[static_cast<int64_t>(i)] = static_cast<T>(data[i]);
    return t;
  }

  template <typename T>
  static Image from_tensor(const Tensor<T>& t, int64_t batch_index = 0) {
    if (t.rank() != 4 || t.dim(1) != 3) throw std::invalid_argument("Image: tensor must be (N,3,H,W)");
    Image img(t.dim(2), t.dim(3));
    int64_t plane = 3 * t.dim(2) * t.dim(3);
    for (int64_t i = 0; i < plane; ++i)
      img.data[static_cast<size_t>(i)] =
          std::clamp(static_cast<float>(t[batch_index * plane + i]), 0.f, 1.f);
    return img;
  }
};

// Batch of images -> (N,3,H,W) tensor.
template <typename T>
Tensor<T> images_to_batch(const std::vector<Image>& imgs) {
  if (imgs.empty()) throw std::invalid_argument("images_to_batch: empty batch");
  int64_t h = imgs[0].height, w = imgs[0].width;
  Tensor<T> t({static_cast<int64_t>(imgs.size()), 3, h, w});
  int64_t plane = 3 * h * w;
  for (size_t i = 0; i < imgs.size(); ++i) {
    if (!imgs[i].same_size(imgs[0])) throw std::invalid_argument("images_to_batch: size mismatch");
    for (int64_t j = 0; j < plane; ++j)
      t[static_cast<int64_t>(i) * plane + j] = static_cast<T>(imgs[i].data[static_cast<size_t>(j)]);
  }
  return t;
}

// Warp by the inverse of (rotate about center, then translate). Samples
// bilinearly with clamp-to-edge, which extends the border color.
inline Image warp_affine(const Image& src, double tx_px, double ty_px, double rot_rad) {
  Image dst(src.height, src.width);
  double cx = 0.5 * static_cast<double>(src.width - 1);
  double cy = 0.5 * static_cast<double>(src.height - 1);
  double c = std::cos(rot_rad), s = std::sin(rot_rad);
  for (int64_t y = 0; y < src.height; ++y) {
    for (int64_t x = 0; x < src.width; ++x) {
      // inverse map: undo translation, then rotate by -rot about center
      double ux = static_cast<double>(x) - tx_px - cx;
      double uy = static_cast<double>(y) - ty_px - cy;
      double sx = c * ux + s * uy + cx;
      double sy = -s * ux + c * uy + cy;
      sx = std::clamp(sx, 0.0, static_cast<double>(src.width - 1));
      sy = std::clamp(sy, 0.0, static_cast<double>(src.height - 1));
      int64_t x0 = static_cast<int64_t>(sx), y0 = static_cast<int64_t>(sy);
      int64_t x1 = std::min(x0 + 1, src.width - 1), y1 = std::min(y0 + 1, src.height - 1);
      double fx = sx - static_cast<double>(x0), fy = sy - static_cast<double>(y0);
      for (int64_t ch = 0; ch < 3; ++ch) {
        double v = (1 - fy) * ((1 - fx) * src.at(ch, y0, x0) + fx * src.at(ch, y0, x1)) +
                   fy * ((1 - fx) * src.at(ch, y1, x0) + fx * src.at(ch, y1, x1));
        dst.at(ch, y, x) = static_cast<float>(v);
      }
    }
  }
  return dst;
}

// Contact sheet: cells laid out row-major with a separator border.
inline Image make_grid(const std::vector<Image>& cells, int64_t cols, int64_t sep = 2,
                       float sep_value = 1.f) {
  if (cells.empty() || cols < 1) throw std::invalid_argument("make_grid: bad arguments");
  int64_t rows = (static_cast<int64_t>(cells.size()) + cols - 1) / cols;
  int64_t ch = cells[0].height, cw = cells[0].width;
  Image out(rows * ch + (rows + 1) * sep, cols * cw + (cols + 1) * sep, sep_value);
  for (size_t i = 0; i < cells.size(); ++i) {
    if (!cells[i].same_size(cells[0])) throw std::invalid_argument("make_grid: cell size mismatch");
    int64_t r = static_cast<int64_t>(i) / cols, c = static_cast<int64_t>(i) % cols;
    int64_t oy = sep + r * (ch + sep), ox = sep + c * (cw + sep);
    for (int64_t chn = 0; chn < 3; ++chn)
      for (int64_t y = 0; y < ch; ++y)
        for (int64_t x = 0; x < cw; ++x) out.at(chn, oy + y, ox + x) = cells[i].at(chn, y, x);
  }
  return out;
}

// Single heatmap channel -> grayscale image scaled to its own maximum.
template <typename T>
Image heatmap_to_image(const Tensor<T>& maps, int64_t n, int64_t k) {
  int64_t h = maps.dim(2), w = maps.dim(3);
  Image img(h, w);
  T mx = T(0);
  for (int64_t p = 0; p < h * w; ++p) mx = std::max(mx, maps[((n * maps.dim(1) + k) * h * w) + p]);
  if (mx <= T(0)) mx = T(1);
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      float v = static_cast<float>(maps[((n * maps.dim(1) + k) * h + y) * w + x] / mx);
      img.at(0, y, x) = img.at(1, y, x) = img.at(2, y, x) = v;
    }
  return img;
}

}  // namespace gaga
