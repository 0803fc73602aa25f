/*
 * Copyright 2026 The IFENet Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "ifenet/model.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "ifenet/data.h"
#include "ifenet/io.h"
#include "ifenet/random.h"

namespace ifenet {
namespace {

constexpr std::string_view kCheckpointMagic = "ifenet-checkpoint";

Matrix UniformMatrix(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = UniformReal(rng, -bound, bound);
  return m;
}

ValueId BroadcastRow(Tape& tape, ValueId row, Eigen::Index rows) {
  return tape.MatMul(tape.Constant(Matrix::Ones(rows, 1)), row);
}

bool SameMatrix(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::equal(a.data(), a.data() + a.size(), b.data());
}

std::string Hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void WriteTensor(std::ostringstream& os, std::string_view name, const Matrix& m) {
  os << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) os << ' ';
      os << FormatReal(m(r, c));
    }
    os << '\n';
  }
}

// Line-oriented reader over checkpoint text.
class CheckpointReader {
 public:
  explicit CheckpointReader(std::string_view text) : text_(text) {}

  std::string_view NextLine() {
    if (pos_ >= text_.size()) throw FormatError("checkpoint: unexpected end of file (truncated?)");
    const size_t end = text_.find('\n', pos_);
    if (end == std::string_view::npos) throw FormatError("checkpoint: unterminated line");
    const std::string_view line = text_.substr(pos_, end - pos_);
    pos_ = end + 1;
    return line;
  }

  std::string Field(std::string_view key) {
    const std::string_view line = NextLine();
    if (line.substr(0, key.size()) != key || line.size() <= key.size() || line[key.size()] != ' ') {
      throw FormatError("checkpoint: expected field '" + std::string(key) + "'");
    }
    return std::string(line.substr(key.size() + 1));
  }

  template <typename T>
  T Number(std::string_view key) {
    const std::string s = Field(key);
    return ParseNumber<T>(s, key);
  }

  Matrix Tensor(std::string_view name) {
    std::istringstream header{std::string(NextLine())};
    std::string tag, got_name;
    long rows = -1, cols = -1;
    header >> tag >> got_name >> rows >> cols;
    if (tag != "tensor" || got_name != name || rows < 0 || cols < 0) {
      throw FormatError("checkpoint: expected tensor '" + std::string(name) + "'");
    }
    Matrix m(rows, cols);
    for (long r = 0; r < rows; ++r) {
      std::string_view line = NextLine();
      for (long c = 0; c < cols; ++c) {
        const size_t sp = line.find(' ');
        const std::string_view tok = line.substr(0, sp);
        m(r, c) = ParseNumber<double>(tok, name);
        line = sp == std::string_view::npos ? std::string_view() : line.substr(sp + 1);
      }
      if (!line.empty()) throw FormatError("checkpoint: extra values in tensor " + std::string(name));
    }
    return m;
  }

  size_t position() const { return pos_; }

 private:
  template <typename T>
  static T ParseNumber(std::string_view s, std::string_view what) {
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw FormatError("checkpoint: bad number '" + std::string(s) + "' in " + std::string(what));
    }
    return v;
  }

  std::string_view text_;
  size_t pos_ = 0;
};

}  // namespace

const char* ModelKindName(ModelKind kind) { return kind == ModelKind::kIfeNet ? "ifenet" : "fnn"; }

ModelKind ParseModelKind(std::string_view name) {
  if (name == "ifenet") return ModelKind::kIfeNet;
  if (name == "fnn") return ModelKind::kFnn;
  throw InvalidArgument("unknown model kind '" + std::string(name) + "'");
}

std::vector<Matrix*> IfeNetParams::Trainable() {
  std::vector<Matrix*> out = {&bn.gamma, &bn.beta};
  for (Matrix& w : ife.units) out.push_back(&w);
  for (Matrix* m : {&fnn.w1, &fnn.b1, &fnn.w2, &fnn.b2}) out.push_back(m);
  return out;
}

std::vector<const Matrix*> IfeNetParams::Trainable() const {
  std::vector<const Matrix*> out;
  for (Matrix* m : const_cast<IfeNetParams*>(this)->Trainable()) out.push_back(m);
  return out;
}

std::vector<std::string> IfeNetParams::TrainableNames() const {
  std::vector<std::string> names = {"bn.gamma", "bn.beta"};
  for (size_t j = 0; j < ife.units.size(); ++j) names.push_back("ife.unit" + std::to_string(j));
  for (const char* n : {"fnn.w1", "fnn.b1", "fnn.w2", "fnn.b2"}) names.emplace_back(n);
  return names;
}

size_t IfeNetParams::ParameterCount() const {
  size_t n = 0;
  for (const Matrix* m : Trainable()) n += static_cast<size_t>(m->size());
  return n;
}

void IfeNetParams::Validate() const {
  const auto dd = static_cast<Eigen::Index>(d);
  const auto hh = static_cast<Eigen::Index>(hidden);
  auto expect = [](const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* what) {
    if (m.rows() != rows || m.cols() != cols) {
      throw ShapeError(std::string("IfeNetParams: ") + what + " has shape " + ShapeString(m) +
                       ", expected " + ShapeString(rows, cols));
    }
    if (!m.allFinite()) throw InvalidArgument(std::string("IfeNetParams: non-finite ") + what);
  };
  if (d < 2 || num_classes < 2 || hidden < 1) {
    throw InvalidArgument("IfeNetParams: need d >= 2, C >= 2, hidden >= 1");
  }
  expect(bn.gamma, 1, dd, "bn.gamma");
  expect(bn.beta, 1, dd, "bn.beta");
  expect(bn.running_mean, 1, dd, "bn.running_mean");
  expect(bn.running_var, 1, dd, "bn.running_var");
  if ((bn.running_var.array() < 0.0).any()) throw InvalidArgument("IfeNetParams: negative running_var");
  if (!(bn.epsilon > 0.0)) throw InvalidArgument("IfeNetParams: bn epsilon must be positive");
  expect(fnn.w1, dd, hh, "fnn.w1");
  expect(fnn.b1, 1, hh, "fnn.b1");
  expect(fnn.w2, hh, num_classes, "fnn.w2");
  expect(fnn.b2, 1, num_classes, "fnn.b2");
  if (kind == ModelKind::kIfeNet) {
    ife.Validate();
    if (ife.d() != d || ife.num_classes() != num_classes) {
      throw ShapeError("IfeNetParams: IFE units do not match d/C");
    }
  } else if (!(ife.r > 0.0)) {
    throw InvalidArgument("IfeNetParams: r must be positive");
  }
}

bool operator==(const IfeNetParams& a, const IfeNetParams& b) {
  if (a.kind != b.kind || a.d != b.d || a.num_classes != b.num_classes || a.hidden != b.hidden ||
      a.seed != b.seed || a.encoder_ref != b.encoder_ref || a.ife.r != b.ife.r ||
      a.bn.momentum != b.bn.momentum || a.bn.epsilon != b.bn.epsilon ||
      a.ife.units.size() != b.ife.units.size()) {
    return false;
  }
  if (!SameMatrix(a.bn.running_mean, b.bn.running_mean) ||
      !SameMatrix(a.bn.running_var, b.bn.running_var)) {
    return false;
  }
  const auto ta = a.Trainable();
  const auto tb = b.Trainable();
  for (size_t i = 0; i < ta.size(); ++i) {
    if (!SameMatrix(*ta[i], *tb[i])) return false;
  }
  return true;
}

IfeNetParams InitParams(size_t d, int num_classes, std::optional<size_t> hidden, double r,
                        uint64_t seed, ModelKind kind) {
  if (d < 2) throw InvalidArgument("InitParams: d must be >= 2");
  if (num_classes < 2) throw InvalidArgument("InitParams: C must be >= 2");
  if (hidden && *hidden < 1) throw InvalidArgument("InitParams: hidden size must be >= 1");
  if (!(r > 0.0) || !std::isfinite(r)) throw InvalidArgument("InitParams: r must be positive");

  IfeNetParams p;
  p.kind = kind;
  p.d = d;
  p.num_classes = num_classes;
  p.hidden = hidden.value_or(d);
  p.seed = seed;
  const auto dd = static_cast<Eigen::Index>(d);
  const auto hh = static_cast<Eigen::Index>(p.hidden);

  p.bn.gamma = Matrix::Ones(1, dd);
  p.bn.beta = Matrix::Zero(1, dd);
  p.bn.running_mean = Matrix::Zero(1, dd);
  p.bn.running_var = Matrix::Ones(1, dd);

  if (kind == ModelKind::kIfeNet) {
    p.ife = IfeParams::Init(d, num_classes, r, DeriveSeed(seed, "init.ife"));
  } else {
    p.ife.r = r;
  }

  Rng rng(DeriveSeed(seed, "init.fnn"));
  p.fnn.w1 = UniformMatrix(dd, hh, 1.0 / std::sqrt(static_cast<double>(d)), rng);
  p.fnn.b1 = Matrix::Zero(1, hh);
  p.fnn.w2 = UniformMatrix(hh, num_classes, 1.0 / std::sqrt(static_cast<double>(p.hidden)), rng);
  p.fnn.b2 = Matrix::Zero(1, num_classes);
  return p;
}

std::vector<ValueId> ParamHandles::All() const {
  std::vector<ValueId> out = {gamma, beta};
  out.insert(out.end(), units.begin(), units.end());
  for (const ValueId& v : {w1, b1, w2, b2}) out.push_back(v);
  return out;
}

ParamHandles RegisterParameters(Tape& tape, const IfeNetParams& params) {
  std::vector<ValueId> ids;
  for (const Matrix* m : params.Trainable()) ids.push_back(tape.Parameter(*m));
  return HandlesFromIds(ids, params);
}

ParamHandles HandlesFromIds(std::span<const ValueId> ids, const IfeNetParams& params) {
  const size_t units = params.ife.units.size();
  if (ids.size() != 6 + units) {
    throw InvalidArgument("HandlesFromIds: expected " + std::to_string(6 + units) + " ids, got " +
                          std::to_string(ids.size()));
  }
  ParamHandles h;
  h.gamma = ids[0];
  h.beta = ids[1];
  h.units.assign(ids.begin() + 2, ids.begin() + 2 + static_cast<std::ptrdiff_t>(units));
  h.w1 = ids[2 + units];
  h.b1 = ids[3 + units];
  h.w2 = ids[4 + units];
  h.b2 = ids[5 + units];
  return h;
}

ValueId BatchNormForward(Tape& tape, const Matrix& x, const BatchNormState& state, ValueId gamma,
                         ValueId beta, Mode mode, BatchMoments* moments) {
  if (x.cols() != state.running_mean.cols()) {
    throw ShapeError("BatchNormForward: input " + ShapeString(x) + " for " +
                     std::to_string(state.running_mean.cols()) + " features");
  }
  RowVector mean;
  RowVector var;
  if (mode == Mode::kTrain) {
    if (x.rows() < 2) throw InvalidArgument("BatchNormForward: train mode needs a batch of >= 2");
    mean = x.colwise().mean();
    var = (x.rowwise() - mean).array().square().colwise().mean().matrix();
    if (moments != nullptr) *moments = {mean, var};
  } else {
    mean = state.running_mean.row(0);
    var = state.running_var.row(0);
  }
  const RowVector inv_std = (var.array() + state.epsilon).rsqrt().matrix();
  const Matrix normalized = ((x.rowwise() - mean).array().rowwise() * inv_std.array()).matrix();

  const ValueId xhat = tape.Constant(normalized);
  const ValueId scaled = tape.Mul(xhat, BroadcastRow(tape, gamma, x.rows()));
  return tape.Add(scaled, BroadcastRow(tape, beta, x.rows()));
}

void UpdateRunningStats(BatchNormState& state, const BatchMoments& moments) {
  const double m = state.momentum;
  state.running_mean = (1.0 - m) * state.running_mean + m * Matrix(moments.mean);
  state.running_var = (1.0 - m) * state.running_var + m * Matrix(moments.var);
}

ForwardResult ForwardOnTape(Tape& tape, const Matrix& x, const IfeNetParams& params,
                            const ParamHandles& handles, Mode mode, const ForwardOptions& options) {
  if (x.cols() != static_cast<Eigen::Index>(params.d)) {
    throw ShapeError("forward: input has " + std::to_string(x.cols()) +
                     " features, model expects d=" + std::to_string(params.d));
  }
  if (x.rows() < 1) throw ShapeError("forward: empty batch");
  ForwardResult result;
  BatchMoments moments;
  result.normalized =
      BatchNormForward(tape, x, params.bn, handles.gamma, handles.beta, mode, &moments);
  if (mode == Mode::kTrain) result.moments = moments;

  ValueId weighted = result.normalized;
  if (params.kind == ModelKind::kIfeNet) {
    ValueId scores;
    if (options.force_unit_scores) {
      scores = tape.Constant(Matrix::Ones(x.rows(), x.cols()));
    } else {
      result.ife = IfeForward(tape, result.normalized, handles.units, params.ife.r);
      scores = result.ife->scores;
    }
    weighted = tape.Mul(scores, result.normalized);
  }

  const Eigen::Index batch = x.rows();
  const ValueId hidden = tape.Relu(
      tape.Add(tape.MatMul(weighted, handles.w1), BroadcastRow(tape, handles.b1, batch)));
  result.logits =
      tape.Add(tape.MatMul(hidden, handles.w2), BroadcastRow(tape, handles.b2, batch));
  return result;
}

ForwardResult IfeNetForward(Tape& tape, const Matrix& x, const IfeNetParams& params, Mode mode,
                            const ForwardOptions& options) {
  return ForwardOnTape(tape, x, params, RegisterParameters(tape, params), mode, options);
}

ForwardResult FnnForward(Tape& tape, const Matrix& x, const IfeNetParams& params, Mode mode) {
  IfeNetParams plain = params;
  plain.kind = ModelKind::kFnn;
  plain.ife.units.clear();
  return IfeNetForward(tape, x, plain, mode);
}

Matrix EvalLogits(const IfeNetParams& params, const Matrix& x) {
  Tape tape;
  return tape.value(IfeNetForward(tape, x, params, Mode::kEval).logits);
}

Matrix ImportanceScores(const IfeNetParams& params, const Matrix& x) {
  if (params.kind != ModelKind::kIfeNet) {
    throw InvalidArgument("ImportanceScores: model has no IFE module");
  }
  Tape tape;
  const ForwardResult fwd = IfeNetForward(tape, x, params, Mode::kEval);
  return tape.value(fwd.ife->scores);
}

Prediction PredictFromLogits(const Matrix& logits) {
  Prediction p;
  p.probabilities.resize(logits.rows(), logits.cols());
  p.classes.reserve(static_cast<size_t>(logits.rows()));
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c) {
      if (logits(r, c) > logits(r, best)) best = c;
    }
    p.classes.push_back(static_cast<int>(best));
    const auto e = (logits.row(r).array() - logits(r, best)).exp();
    p.probabilities.row(r) = (e / e.sum()).matrix();
  }
  return p;
}

Prediction Predict(const IfeNetParams& params, const Matrix& x) {
  return PredictFromLogits(EvalLogits(params, x));
}

std::string SerializeCheckpoint(const IfeNetParams& params) {
  params.Validate();
  if (params.encoder_ref.find('\n') != std::string::npos) {
    throw InvalidArgument("checkpoint: encoder reference contains a newline");
  }
  std::ostringstream os;
  os << kCheckpointMagic << '\n';
  os << "version " << IfeNetParams::kVersion << '\n';
  os << "kind " << ModelKindName(params.kind) << '\n';
  os << "d " << params.d << '\n';
  os << "classes " << params.num_classes << '\n';
  os << "hidden " << params.hidden << '\n';
  os << "r " << FormatReal(params.ife.r) << '\n';
  os << "seed " << params.seed << '\n';
  os << "encoder " << (params.encoder_ref.empty() ? "-" : params.encoder_ref) << '\n';
  os << "bn.momentum " << FormatReal(params.bn.momentum) << '\n';
  os << "bn.epsilon " << FormatReal(params.bn.epsilon) << '\n';
  WriteTensor(os, "bn.running_mean", params.bn.running_mean);
  WriteTensor(os, "bn.running_var", params.bn.running_var);
  const auto names = params.TrainableNames();
  const auto tensors = params.Trainable();
  for (size_t i = 0; i < names.size(); ++i) WriteTensor(os, names[i], *tensors[i]);
  const std::string body = os.str();
  return body + "checksum " + Hex64(Fnv1a64(body)) + "\n";
}

IfeNetParams ParseCheckpoint(std::string_view text) {
  const size_t marker = text.rfind("checksum ");
  if (marker == std::string_view::npos || (marker > 0 && text[marker - 1] != '\n')) {
    throw FormatError("checkpoint: missing checksum line (corrupt or truncated file)");
  }
  std::string_view stored = text.substr(marker + 9);
  if (!stored.empty() && stored.back() == '\n') stored.remove_suffix(1);
  const std::string_view body = text.substr(0, marker);
  if (stored != Hex64(Fnv1a64(body))) {
    throw FormatError("checkpoint: checksum mismatch (corrupt file)");
  }

  CheckpointReader in(body);
  if (in.NextLine() != kCheckpointMagic) throw FormatError("checkpoint: bad magic line");
  const int version = in.Number<int>("version");
  if (version != IfeNetParams::kVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  IfeNetParams p;
  p.kind = ParseModelKind(in.Field("kind"));
  p.d = in.Number<size_t>("d");
  p.num_classes = in.Number<int>("classes");
  p.hidden = in.Number<size_t>("hidden");
  p.ife.r = in.Number<double>("r");
  p.seed = in.Number<uint64_t>("seed");
  p.encoder_ref = in.Field("encoder");
  if (p.encoder_ref == "-") p.encoder_ref.clear();
  p.bn.momentum = in.Number<double>("bn.momentum");
  p.bn.epsilon = in.Number<double>("bn.epsilon");
  p.bn.running_mean = in.Tensor("bn.running_mean");
  p.bn.running_var = in.Tensor("bn.running_var");
  if (p.kind == ModelKind::kIfeNet) p.ife.units.resize(p.d);
  const auto names = p.TrainableNames();
  const auto tensors = p.Trainable();
  for (size_t i = 0; i < names.size(); ++i) *tensors[i] = in.Tensor(names[i]);
  if (in.position() != body.size()) throw FormatError("checkpoint: trailing content");
  p.Validate();
  return p;
}

void SaveCheckpoint(const IfeNetParams& params, const std::filesystem::path& path) {
  WriteFileAtomic(path, SerializeCheckpoint(params));
}

IfeNetParams LoadCheckpoint(const std::filesystem::path& path) {
  return ParseCheckpoint(ReadFile(path));
}

}  // namespace ifenet
