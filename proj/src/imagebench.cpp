// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

#include "uacgan/imagebench.hpp"

#include "uacgan/checkpoint.hpp"
#include "uacgan/image.hpp"
#include "uacgan/optim.hpp"

#include <Eigen/Eigenvalues>
#include <curl/curl.h>
#include <openssl/evp.h>
#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>

#ifndef UACGAN_SOURCE_DIR
#define UACGAN_SOURCE_DIR "."
#endif

namespace uacgan {

namespace {

std::vector<std::uint8_t> read_maybe_gzip(const std::filesystem::path& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (f == nullptr) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> buf(1 << 20);
  for (;;) {
    const int n = gzread(f, buf.data(), static_cast<unsigned>(buf.size()));
    if (n < 0) {
      int err = 0;
      const std::string msg = gzerror(f, &err);
      gzclose(f);
      throw std::runtime_error("read error in " + path.string() + ": " + msg);
    }
    if (n == 0) break;
    out.insert(out.end(), buf.begin(), buf.begin() + n);
  }
  gzclose(f);
  return out;
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t at) {
  if (at + 4 > b.size()) throw std::runtime_error("truncated IDX header");
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
         std::uint32_t{b[at + 3]};
}

std::string hex(const unsigned char* d, unsigned n) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  for (unsigned i = 0; i < n; ++i) {
    s += digits[d[i] >> 4];
    s += digits[d[i] & 15];
  }
  return s;
}

std::string digest_file(const std::filesystem::path& path, const EVP_MD* md) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, void (*)(EVP_MD_CTX*)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), md, nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char out[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_DigestFinal_ex(ctx.get(), out, &len);
  return hex(out, len);
}

std::size_t curl_write(char* data, std::size_t size, std::size_t n, void* user) {
  return std::fwrite(data, size, n, static_cast<FILE*>(user)) * size;
}

const char* env(const char* name) {
  const char* v = std::getenv(name);
  return v != nullptr && *v != '\0' ? v : nullptr;
}

Matrix log_softmax_rows(const Matrix& logits) {
  Matrix out = logits;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double m = out.row(i).maxCoeff();
    out.row(i).array() -= m;
    out.row(i).array() -= std::log(out.row(i).array().exp().sum());
  }
  return out;
}

}  // namespace

void ImageDataset::validate() const {
  if (images.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw std::invalid_argument(name + ": image and label counts differ");
  }
  if (images.cols() != shape.size()) throw std::invalid_argument(name + ": image width does not match shape");
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw std::invalid_argument(name + ": label out of range");
  }
  if (images.size() > 0 && (images.minCoeff() < -1.0 || images.maxCoeff() > 1.0)) {
    throw std::invalid_argument(name + ": pixels outside [-1, 1]");
  }
}

std::vector<std::size_t> ImageDataset::class_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (int y : labels) ++counts.at(static_cast<std::size_t>(y));
  return counts;
}

std::size_t official_split_size(const std::string& name, const std::string& split) {
  const bool train = split == "train";
  if (!train && split != "test") throw std::invalid_argument("unknown split '" + split + "' (expected train or test)");
  if (name == "mnist") return train ? 60000 : 10000;
  if (name == "cifar10") return train ? 50000 : 10000;
  if (name == "mnist-5k") return train ? 4000 : 1000;
  throw std::invalid_argument("unknown dataset '" + name + "' (expected mnist, mnist-5k or cifar10)");
}

ImageDataset read_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                      const std::string& name, const std::string& split) {
  const auto ib = read_maybe_gzip(images);
  const auto lb = read_maybe_gzip(labels);
  if (be32(ib, 0) != 0x803) throw std::runtime_error(images.string() + " is not an IDX image file");
  if (be32(lb, 0) != 0x801) throw std::runtime_error(labels.string() + " is not an IDX label file");
  const std::size_t n = be32(ib, 4);
  const int h = static_cast<int>(be32(ib, 8));
  const int w = static_cast<int>(be32(ib, 12));
  if (be32(lb, 4) != n) throw std::runtime_error("IDX image and label counts differ");
  const std::size_t pixels = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  if (ib.size() < 16 + n * pixels || lb.size() < 8 + n) throw std::runtime_error("truncated IDX payload");

  ImageDataset d;
  d.name = name;
  d.split = split;
  d.shape = {1, h, w};
  d.images.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(pixels));
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < pixels; ++p) {
      d.images(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = ib[16 + i * pixels + p] / 127.5 - 1.0;
    }
    d.labels[i] = lb[8 + i];
  }
  d.validate();
  return d;
}

ImageDataset read_cifar10_batches(const std::vector<std::vector<std::uint8_t>>& batches, const std::string& split) {
  constexpr std::size_t kRecord = 1 + 3072;
  std::size_t n = 0;
  for (const auto& b : batches) {
    if (b.size() % kRecord != 0) throw std::runtime_error("CIFAR-10 batch size is not a multiple of the record size");
    n += b.size() / kRecord;
  }
  ImageDataset d;
  d.name = "cifar10";
  d.split = split;
  d.shape = {3, 32, 32};
  d.images.resize(static_cast<Eigen::Index>(n), 3072);
  d.labels.resize(n);
  std::size_t row = 0;
  for (const auto& b : batches) {
    for (std::size_t at = 0; at < b.size(); at += kRecord, ++row) {
      d.labels[row] = b[at];
      for (std::size_t p = 0; p < 3072; ++p) {
        d.images(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(p)) = b[at + 1 + p] / 127.5 - 1.0;
      }
    }
  }
  d.validate();
  return d;
}

ImageDataset read_cifar10_archive(const std::filesystem::path& archive, const std::string& split) {
  const auto tar = read_maybe_gzip(archive);
  std::vector<std::string> wanted;
  if (split == "train") {
    for (int i = 1; i <= 5; ++i) wanted.push_back("data_batch_" + std::to_string(i) + ".bin");
  } else if (split == "test") {
    wanted.push_back("test_batch.bin");
  } else {
    throw std::invalid_argument("unknown split '" + split + "'");
  }
  std::vector<std::vector<std::uint8_t>> found(wanted.size());
  std::size_t at = 0;
  while (at + 512 <= tar.size()) {
    const char* header = reinterpret_cast<const char*>(tar.data() + at);
    if (header[0] == '\0') break;
    const std::string path(header, strnlen(header, 100));
    const std::size_t size = std::strtoull(std::string(header + 124, 12).c_str(), nullptr, 8);
    const std::string base = path.substr(path.find_last_of('/') + 1);
    for (std::size_t i = 0; i < wanted.size(); ++i) {
      if (base == wanted[i]) {
        if (at + 512 + size > tar.size()) throw std::runtime_error("truncated tar member " + path);
        found[i].assign(tar.begin() + static_cast<std::ptrdiff_t>(at + 512),
                        tar.begin() + static_cast<std::ptrdiff_t>(at + 512 + size));
      }
    }
    at += 512 + (size + 511) / 512 * 512;
  }
  for (std::size_t i = 0; i < wanted.size(); ++i) {
    if (found[i].empty()) throw std::runtime_error(archive.string() + " lacks " + wanted[i]);
  }
  return read_cifar10_batches(found, split);
}

const std::vector<RemoteFile>& remote_files(const std::string& dataset) {
  static const std::string mnist = "https://ossci-datasets.s3.amazonaws.com/mnist/";
  static const std::vector<RemoteFile> mnist_files = {
      {"train-images-idx3-ubyte.gz", mnist + "train-images-idx3-ubyte.gz", "f68b3c2dcbeaaa9fbdd348bbdeb94873"},
      {"train-labels-idx1-ubyte.gz", mnist + "train-labels-idx1-ubyte.gz", "d53e105ee54ea40749a09fcbcd1e9432"},
      {"t10k-images-idx3-ubyte.gz", mnist + "t10k-images-idx3-ubyte.gz", "9fb629c4189551a2d022fa330f9573f3"},
      {"t10k-labels-idx1-ubyte.gz", mnist + "t10k-labels-idx1-ubyte.gz", "ec29112dd5afa0611ce80d1b7f02629c"},
  };
  static const std::vector<RemoteFile> cifar_files = {
      {"cifar-10-binary.tar.gz", "https://www.cs.toronto.edu/~kriz/cifar-10-binary.tar.gz",
       "c32a1d4ab5d03f1284b67883e8d87530"},
  };
  if (dataset == "mnist") return mnist_files;
  if (dataset == "cifar10") return cifar_files;
  throw std::invalid_argument("no remote files for dataset '" + dataset + "'");
}

std::filesystem::path data_cache_dir() {
  if (const char* d = env("UACGAN_DATA_DIR")) return d;
  if (const char* x = env("XDG_CACHE_HOME")) return std::filesystem::path(x) / "uacgan";
  if (const char* h = env("HOME")) return std::filesystem::path(h) / ".cache" / "uacgan";
  return std::filesystem::path(".uacgan-cache");
}

std::filesystem::path bundled_mnist_dir() {
  if (const char* d = env("UACGAN_BUNDLED_DATA")) return d;
  return std::filesystem::path(UACGAN_SOURCE_DIR) / "data" / "mnist-5k";
}

std::string md5_file(const std::filesystem::path& path) { return digest_file(path, EVP_md5()); }
std::string sha256_file(const std::filesystem::path& path) { return digest_file(path, EVP_sha256()); }

std::filesystem::path fetch(const RemoteFile& file, const std::filesystem::path& cache_dir) {
  const auto dst = cache_dir / file.filename;
  if (std::filesystem::exists(dst)) {
    const auto got = md5_file(dst);
    if (got == file.md5) return dst;
    throw ChecksumMismatch(dst.string() + " has MD5 " + got + ", expected " + file.md5 +
                           "; delete it to download again");
  }
  std::filesystem::create_directories(cache_dir);
  const auto tmp = std::filesystem::path(dst.string() + ".part");
  {
    std::unique_ptr<FILE, int (*)(FILE*)> out(std::fopen(tmp.c_str(), "wb"), &std::fclose);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    std::unique_ptr<CURL, void (*)(CURL*)> curl(curl_easy_init(), &curl_easy_cleanup);
    if (!curl) throw std::runtime_error("libcurl initialization failed");
    curl_easy_setopt(curl.get(), CURLOPT_URL, file.url.c_str());
    curl_easy_setopt(curl.get(), CURLOPT_FOLLOWLOCATION, 1L);
    curl_easy_setopt(curl.get(), CURLOPT_FAILONERROR, 1L);
    curl_easy_setopt(curl.get(), CURLOPT_WRITEFUNCTION, &curl_write);
    curl_easy_setopt(curl.get(), CURLOPT_WRITEDATA, out.get());
    const CURLcode rc = curl_easy_perform(curl.get());
    if (rc != CURLE_OK) {
      out.reset();
      std::filesystem::remove(tmp);
      throw std::runtime_error("download of " + file.url + " failed: " + curl_easy_strerror(rc));
    }
  }
  const auto got = md5_file(tmp);
  if (got != file.md5) {
    std::filesystem::remove(tmp);
    throw ChecksumMismatch("download of " + file.url + " has MD5 " + got + ", expected " + file.md5);
  }
  std::filesystem::rename(tmp, dst);
  return dst;
}

ImageDataset load_dataset(const std::string& name, const std::string& split,
                          const std::optional<std::filesystem::path>& cache_dir, bool download) {
  const std::size_t expected = official_split_size(name, split);
  const std::string prefix = split == "train" ? "train" : "t10k";
  ImageDataset d;
  if (name == "mnist-5k") {
    const auto dir = bundled_mnist_dir();
    d = read_idx(dir / (prefix + "-images-idx3-ubyte.gz"), dir / (prefix + "-labels-idx1-ubyte.gz"), name, split);
  } else {
    const auto dir = cache_dir.value_or(data_cache_dir()) / name;
    const auto& files = remote_files(name);
    std::vector<std::filesystem::path> paths;
    for (const auto& f : files) {
      if (!download && !std::filesystem::exists(dir / f.filename)) {
        throw std::runtime_error(name + " is not in " + dir.string() + "; run `uacgan fetch --dataset " + name +
                                 "` or pass --download");
      }
      paths.push_back(fetch(f, dir));
    }
    if (name == "mnist") {
      d = read_idx(dir / (prefix + "-images-idx3-ubyte.gz"), dir / (prefix + "-labels-idx1-ubyte.gz"), name, split);
    } else {
      d = read_cifar10_archive(paths.front(), split);
    }
  }
  if (d.size() != expected) {
    throw std::runtime_error(name + "/" + split + " has " + std::to_string(d.size()) + " images, expected " +
                             std::to_string(expected));
  }
  return d;
}

// ---- scoring ----------------------------------------------------------------

MeanStd inception_score(const Matrix& p, int n_splits) {
  if (n_splits < 1) throw std::invalid_argument("inception_score: n_splits must be >= 1");
  if (p.rows() < n_splits) {
    throw std::invalid_argument("inception_score: " + std::to_string(p.rows()) + " rows for " +
                                std::to_string(n_splits) + " splits");
  }
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    if ((p.row(i).array() < 0.0).any() || std::abs(p.row(i).sum() - 1.0) > 1e-6) {
      throw std::invalid_argument("inception_score: row " + std::to_string(i) + " is not a distribution");
    }
  }
  const Eigen::Index per = p.rows() / n_splits;
  std::vector<double> scores;
  for (int s = 0; s < n_splits; ++s) {
    const auto block = p.middleRows(s * per, per);
    const Eigen::RowVectorXd py = block.colwise().mean();
    double kl = 0.0;
    for (Eigen::Index i = 0; i < block.rows(); ++i) {
      for (Eigen::Index k = 0; k < block.cols(); ++k) {
        const double v = block(i, k);
        if (v > 0.0) kl += v * (std::log(v) - std::log(py(k)));
      }
    }
    scores.push_back(std::exp(kl / static_cast<double>(per)));
  }
  MeanStd out;
  for (double s : scores) out.mean += s;
  out.mean /= static_cast<double>(scores.size());
  for (double s : scores) out.stddev += (s - out.mean) * (s - out.mean);
  out.stddev = std::sqrt(out.stddev / static_cast<double>(scores.size()));
  return out;
}

GaussianMoments GaussianMoments::of(const Matrix& f) {
  if (f.rows() < 2) throw std::invalid_argument("GaussianMoments: need at least 2 rows");
  GaussianMoments m;
  m.mean = f.colwise().mean().transpose();
  const Matrix centered = f.rowwise() - m.mean.transpose();
  m.cov = (centered.transpose() * centered) / static_cast<double>(f.rows() - 1);
  return m;
}

FrechetResult frechet_distance_detail(const Vector& mu1, const Matrix& s1, const Vector& mu2, const Matrix& s2) {
  const Eigen::Index d = mu1.size();
  if (mu2.size() != d || s1.rows() != d || s1.cols() != d || s2.rows() != d || s2.cols() != d) {
    throw std::invalid_argument("frechet_distance: dimension mismatch");
  }
  if ((s1 - s1.transpose()).cwiseAbs().maxCoeff() > 1e-6 || (s2 - s2.transpose()).cwiseAbs().maxCoeff() > 1e-6) {
    throw std::invalid_argument("frechet_distance: covariance is not symmetric");
  }
  FrechetResult r;
  // tr (Σ1 Σ2)^{1/2} = tr (Σ1^{1/2} Σ2 Σ1^{1/2})^{1/2}; the inner matrix is symmetric.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e1(Eigen::MatrixXd(0.5 * (s1 + s1.transpose())));
  Eigen::VectorXd l1 = e1.eigenvalues();
  r.clipped_eigenvalue = std::min(0.0, l1.minCoeff());
  const Eigen::MatrixXd root1 =
      e1.eigenvectors() * l1.cwiseMax(0.0).cwiseSqrt().asDiagonal() * e1.eigenvectors().transpose();
  const Eigen::MatrixXd inner = root1 * Eigen::MatrixXd(s2) * root1;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e2(Eigen::MatrixXd(0.5 * (inner + inner.transpose())),
                                                   Eigen::EigenvaluesOnly);
  const Eigen::VectorXd l2 = e2.eigenvalues();
  r.clipped_eigenvalue = std::min(r.clipped_eigenvalue, l2.minCoeff());
  const double tr_sqrt = l2.cwiseMax(0.0).cwiseSqrt().sum();
  r.value = (mu1 - mu2).squaredNorm() + s1.trace() + s2.trace() - 2.0 * tr_sqrt;
  return r;
}

double frechet_distance(const Vector& mu1, const Matrix& s1, const Vector& mu2, const Matrix& s2) {
  return frechet_distance_detail(mu1, s1, mu2, s2).value;
}

MnistScorer::MnistScorer(std::uint64_t seed) {
  Rng rng(seed, "init.scorer");
  trunk_ = std::make_unique<nn::Sequential>(784);
  trunk_->emplace<nn::Linear>(784, 128, rng);
  trunk_->activate(nn::ActivationKind::relu);
  trunk_->emplace<nn::Linear>(128, 64, rng);
  trunk_->activate(nn::ActivationKind::relu);
  head_ = std::make_unique<nn::Linear>(64, 10, rng);
}

std::pair<Matrix, Matrix> MnistScorer::extract(const Matrix& images) {
  if (images.cols() != 784) throw std::invalid_argument("MNIST scorer expects 784-pixel rows");
  trunk_->set_trainable(false);
  head_->set_trainable(false);
  Matrix features(images.rows(), 64);
  Matrix probs(images.rows(), 10);
  constexpr Eigen::Index kChunk = 1000;
  for (Eigen::Index at = 0; at < images.rows(); at += kChunk) {
    const Eigen::Index m = std::min(kChunk, images.rows() - at);
    const ag::Var f = trunk_->forward(ag::Var::constant(images.middleRows(at, m)));
    features.middleRows(at, m) = f.value() / feature_scale_;
    probs.middleRows(at, m) = log_softmax_rows(head_->forward(f).value()).array().exp().matrix();
  }
  return {features, probs};
}

double MnistScorer::accuracy(const ImageDataset& data) {
  const auto [features, probs] = extract(data.images);
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index arg = 0;
    probs.row(i).maxCoeff(&arg);
    correct += arg == data.labels[static_cast<std::size_t>(i)];
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

MnistScorer::TrainReport MnistScorer::train(const ImageDataset& train, const ImageDataset& test, int epochs,
                                            std::uint64_t seed) {
  std::vector<ag::Var> params = trunk_->parameters();
  for (auto& p : head_->parameters()) params.push_back(p);
  AdamOptions o;
  o.learning_rate = 1e-3;
  o.beta1 = 0.9;
  Adam adam(params, o);
  Rng rng(seed, "scorer.data");
  constexpr int kBatch = 64;
  const int n = static_cast<int>(train.size());
  for (int e = 0; e < epochs; ++e) {
    const auto order = rng.permutation(n);
    for (int at = 0; at + kBatch <= n; at += kBatch) {
      Matrix x(kBatch, 784);
      std::vector<int> y(kBatch);
      for (int i = 0; i < kBatch; ++i) {
        x.row(i) = train.images.row(order[static_cast<std::size_t>(at + i)]);
        y[static_cast<std::size_t>(i)] = train.labels[static_cast<std::size_t>(order[static_cast<std::size_t>(at + i)])];
      }
      trunk_->set_trainable(true);
      head_->set_trainable(true);
      adam.zero_grad();
      const ag::Var logits = head_->forward(trunk_->forward(ag::Var::constant(std::move(x))));
      ag::backward(-ag::mean(ag::pick(ag::log_softmax(logits), y)));
      adam.step();
    }
  }
  feature_scale_ = 1.0;
  const Matrix raw = extract(train.images).first;
  feature_scale_ = std::sqrt(GaussianMoments::of(raw).cov.trace() / static_cast<double>(raw.cols()));
  if (!(feature_scale_ > 0.0)) throw std::runtime_error("scorer features have zero variance");
  TrainReport r;
  r.train_accuracy = accuracy(train);
  r.test_accuracy = accuracy(test);
  return r;
}

void MnistScorer::save(const std::filesystem::path& path) const {
  CheckpointData data;
  data.meta = {{"id", kId}, {"architecture", "784-128-64-10 relu mlp"}};
  for (const auto& [name, p] : trunk_->named_parameters()) data.arrays["trunk." + name] = p.value();
  for (const auto& [name, p] : head_->named_parameters()) data.arrays["head." + name] = p.value();
  data.arrays["feature_scale"] = Matrix::Constant(1, 1, feature_scale_);
  write_checkpoint(path, data);
}

std::unique_ptr<MnistScorer> MnistScorer::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("scorer weights not found at " + path.string() +
                             "; create them with `uacgan train-scorer --output " + path.string() + "`");
  }
  const CheckpointData data = read_checkpoint(path);
  if (data.meta.value("id", "") != kId) throw std::runtime_error(path.string() + " is not a " + kId + " scorer");
  auto s = std::make_unique<MnistScorer>();
  auto assign = [&](nn::Module& m, const std::string& prefix) {
    for (auto& [name, p] : m.named_parameters()) {
      auto it = data.arrays.find(prefix + name);
      if (it == data.arrays.end() || it->second.rows() != p.rows() || it->second.cols() != p.cols()) {
        throw std::runtime_error(path.string() + ": missing or misshapen array " + prefix + name);
      }
      ag::Var v = p;
      v.mutable_value() = it->second;
    }
  };
  assign(*s->trunk_, "trunk.");
  assign(*s->head_, "head.");
  const auto scale = data.arrays.find("feature_scale");
  if (scale == data.arrays.end() || scale->second.size() != 1 || !(scale->second(0, 0) > 0.0)) {
    throw std::runtime_error(path.string() + ": missing or invalid feature_scale");
  }
  s->feature_scale_ = scale->second(0, 0);
  s->hash_ = sha256_file(path);
  return s;
}

std::filesystem::path default_scorer_path() {
  if (const char* p = env("UACGAN_SCORER")) return p;
  return std::filesystem::path(UACGAN_SOURCE_DIR) / "data" / "scorers" / "mnist-mlp-v1.ckpt";
}

std::unique_ptr<FeatureExtractor> load_extractor(const std::string& dataset,
                                                 const std::optional<std::filesystem::path>& weights) {
  if (dataset == "mnist" || dataset == "mnist-5k") return MnistScorer::load(weights.value_or(default_scorer_path()));
  if (dataset == "cifar10") {
    throw std::runtime_error(
        "CIFAR-10 scoring uses Inception-v3 pool3 features, and this build has no Inception-v3 implementation or "
        "weights. Score CIFAR-10 samples externally (export them with `uacgan grid`), or supply an extractor via "
        "the FeatureExtractor interface.");
  }
  throw std::invalid_argument("no feature extractor for dataset '" + dataset + "'");
}

nlohmann::json to_json(const ScoreReport& r) {
  return {{"inception_score", {{"mean", r.inception_score.mean}, {"std", r.inception_score.stddev}}},
          {"fid", r.fid},
          {"n_samples", r.n_samples},
          {"extractor", r.extractor_id},
          {"weights_sha256", r.weights_hash},
          {"clipped_eigenvalue", r.clipped_eigenvalue}};
}

Matrix sample_generator(GeneratorNet& g, const LabelSpec& labels, int n, Rng& rng) {
  g.set_trainable(false);
  Matrix out(n, g.output_shape().size());
  constexpr int kChunk = 500;
  for (int at = 0; at < n; at += kChunk) {
    const int m = std::min(kChunk, n - at);
    const Matrix z = g.latent().sample(rng, m);
    const auto y = labels.sample(rng, static_cast<std::size_t>(m));
    out.middleRows(at, m) = g.generate(z, y);
  }
  return out;
}

ScoreReport score_images(FeatureExtractor& extractor, const Matrix& images, const GaussianMoments& reference,
                         int n_splits) {
  const auto [features, probs] = extractor.extract(images);
  ScoreReport r;
  r.inception_score = inception_score(probs, n_splits);
  const auto m = GaussianMoments::of(features);
  const auto fid = frechet_distance_detail(m.mean, m.cov, reference.mean, reference.cov);
  r.fid = fid.value;
  r.clipped_eigenvalue = fid.clipped_eigenvalue;
  r.n_samples = static_cast<int>(images.rows());
  r.extractor_id = extractor.id();
  r.weights_hash = extractor.weights_hash();
  if (fid.clipped_eigenvalue < -1e-3) {
    std::fprintf(stderr, "warning: clipped eigenvalue %.3g in FID matrix square root\n", fid.clipped_eigenvalue);
  }
  return r;
}

ScoreReport score_generator(GeneratorNet& g, const LabelSpec& labels, const ImageDataset& real,
                            FeatureExtractor& extractor, int n_samples, std::uint64_t seed) {
  if (!(g.output_shape() == real.shape)) {
    throw std::invalid_argument("generator output " + g.output_shape().to_string() + " does not match dataset " +
                                real.shape.to_string());
  }
  const auto reference = GaussianMoments::of(extractor.extract(real.images).first);
  Rng rng(seed, "score");
  return score_images(extractor, sample_generator(g, labels, n_samples, rng), reference);
}

double self_fid(const ImageDataset& data, FeatureExtractor& extractor, std::uint64_t seed) {
  const Matrix features = extractor.extract(data.images).first;
  Rng rng(seed, "self_fid");
  const auto order = rng.permutation(static_cast<int>(features.rows()));
  const Eigen::Index half = features.rows() / 2;
  Matrix a(half, features.cols());
  Matrix b(half, features.cols());
  for (Eigen::Index i = 0; i < half; ++i) {
    a.row(i) = features.row(order[static_cast<std::size_t>(i)]);
    b.row(i) = features.row(order[static_cast<std::size_t>(half + i)]);
  }
  const auto ma = GaussianMoments::of(a);
  const auto mb = GaussianMoments::of(b);
  return frechet_distance(ma.mean, ma.cov, mb.mean, mb.cov);
}

GridResult grid_statistics(const Matrix& samples) {
  GridResult r;
  if (samples.rows() < 2) return r;
  const Eigen::RowVectorXd mean = samples.colwise().mean();
  r.variance = (samples.rowwise() - mean).array().square().colwise().mean().mean();
  const double mean_sq = samples.array().square().mean();
  r.collapsed = r.variance == 0.0 || r.variance < kCollapseRelativeVariance * mean_sq;
  return r;
}

void write_image_grid(const Matrix& samples, const DataShape& shape, int rows, int cols,
                      const std::filesystem::path& png_path) {
  if (samples.rows() < static_cast<Eigen::Index>(rows) * cols) throw std::invalid_argument("too few samples for grid");
  if (shape.channels != 1 && shape.channels != 3) throw std::invalid_argument("grid needs 1 or 3 channels");
  constexpr int kPad = 2;
  RgbImage img(cols * (shape.width + kPad) + kPad, rows * (shape.height + kPad) + kPad, {0, 0, 0});
  const int plane = shape.height * shape.width;
  auto to_byte = [](double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp((v + 1.0) * 127.5, 0.0, 255.0)));
  };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const auto s = samples.row(r * cols + c);
      const int ox = kPad + c * (shape.width + kPad);
      const int oy = kPad + r * (shape.height + kPad);
      for (int y = 0; y < shape.height; ++y) {
        for (int x = 0; x < shape.width; ++x) {
          const int p = y * shape.width + x;
          Rgb px;
          if (shape.channels == 1) {
            px.r = px.g = px.b = to_byte(s(p));
          } else {
            px = {to_byte(s(p)), to_byte(s(plane + p)), to_byte(s(2 * plane + p))};
          }
          img.set(ox + x, oy + y, px);
        }
      }
    }
  }
  write_png(img, png_path);
}

GridResult class_grid(GeneratorNet& g, int k, int rows, int cols, std::uint64_t seed,
                      const std::filesystem::path& png_path, const std::function<void(const std::string&)>& log) {
  if (k < 0 || k >= g.num_classes()) {
    throw std::out_of_range("class " + std::to_string(k) + " outside 0.." + std::to_string(g.num_classes() - 1));
  }
  if (rows < 1 || cols < 1) throw std::invalid_argument("grid needs at least one row and column");
  g.set_trainable(false);
  Rng rng(seed, "grid");
  const int n = rows * cols;
  const Matrix z = g.latent().sample(rng, n);
  const std::vector<int> labels(static_cast<std::size_t>(n), k);
  const Matrix samples = g.generate(z, labels);
  write_image_grid(samples, g.output_shape(), rows, cols, png_path);
  const GridResult r = grid_statistics(samples);
  if (r.collapsed && log) {
    log("class " + std::to_string(k) + " grid looks collapsed: per-pixel variance " + std::to_string(r.variance));
  }
  return r;
}

}  // namespace uacgan
