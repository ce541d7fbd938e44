#include "fragseg/io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "fragseg/corpus.hpp"

namespace fragseg::io {
namespace {

cv::Mat decode(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingFile("missing image: " + path.string());
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) throw DecodeError("cannot decode image: " + path.string());
  if (m.depth() == CV_16U) {
    const cv::Mat wide = m;
    cv::Mat narrow(wide.size(), CV_MAKETYPE(CV_8U, wide.channels()));
    const int n = wide.cols * wide.channels();
    for (int y = 0; y < wide.rows; ++y) {
      const auto* src = wide.ptr<std::uint16_t>(y);
      auto* dst = narrow.ptr<std::uint8_t>(y);
      for (int i = 0; i < n; ++i) dst[i] = static_cast<std::uint8_t>(src[i] >> 8);
    }
    m = narrow;
  } else if (m.depth() != CV_8U) {
    throw DecodeError("unsupported sample type (need 8 or 16 bit): " + path.string());
  }
  return m;
}

// OpenCV stores colour as BGR(A).
RasterRGB to_rgb(const cv::Mat& m) {
  RasterRGB out(m.cols, m.rows);
  const int ch = m.channels();
  for (int y = 0; y < m.rows; ++y) {
    const auto* row = m.ptr<std::uint8_t>(y);
    for (int x = 0; x < m.cols; ++x) {
      const auto* px = row + x * ch;
      if (ch == 1) {
        out.set(y, x, {px[0], px[0], px[0]});
      } else {
        out.set(y, x, {px[2], px[1], px[0]});
      }
    }
  }
  return out;
}

void encode(const std::filesystem::path& path, const cv::Mat& m) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), m);
  } catch (const cv::Exception& e) {
    throw IoError("cannot write " + path.string() + ": " + e.what());
  }
  if (!ok) throw IoError("cannot write " + path.string());
}

}  // namespace

RasterGray8 read_gray8(const std::filesystem::path& path) {
  cv::Mat m = decode(path);
  if (m.channels() == 1) {
    RasterGray8 out(m.rows, m.cols);
    for (int y = 0; y < m.rows; ++y) {
      const auto* row = m.ptr<std::uint8_t>(y);
      std::copy(row, row + m.cols, out.row(y).data());
    }
    return out;
  }
  return to_grayscale(to_rgb(m));
}

RasterRGB read_rgb(const std::filesystem::path& path) { return to_rgb(decode(path)); }

void write_png(const std::filesystem::path& path, const RasterGray8& img) {
  cv::Mat m(static_cast<int>(img.rows()), static_cast<int>(img.cols()), CV_8UC1);
  for (int y = 0; y < m.rows; ++y) std::copy(img.row(y).data(), img.row(y).data() + m.cols, m.ptr<std::uint8_t>(y));
  encode(path, m);
}

void write_png(const std::filesystem::path& path, const Mask& mask) {
  write_png(path, RasterGray8(mask.cast<std::uint8_t>() * std::uint8_t{255}));
}

void write_png(const std::filesystem::path& path, const RasterRGB& img) {
  cv::Mat m(static_cast<int>(img.height()), static_cast<int>(img.width()), CV_8UC3);
  for (int y = 0; y < m.rows; ++y) {
    auto* row = m.ptr<std::uint8_t>(y);
    for (int x = 0; x < m.cols; ++x) {
      row[3 * x + 0] = img.planes[2](y, x);
      row[3 * x + 1] = img.planes[1](y, x);
      row[3 * x + 2] = img.planes[0](y, x);
    }
  }
  encode(path, m);
}

void write_png(const std::filesystem::path& path, const RasterRGB& img, const RasterGray8& alpha) {
  require_same_dims(img, alpha, "write_png");
  cv::Mat m(static_cast<int>(img.height()), static_cast<int>(img.width()), CV_8UC4);
  for (int y = 0; y < m.rows; ++y) {
    auto* row = m.ptr<std::uint8_t>(y);
    for (int x = 0; x < m.cols; ++x) {
      row[4 * x + 0] = img.planes[2](y, x);
      row[4 * x + 1] = img.planes[1](y, x);
      row[4 * x + 2] = img.planes[0](y, x);
      row[4 * x + 3] = alpha(y, x);
    }
  }
  encode(path, m);
}

}  // namespace fragseg::io
