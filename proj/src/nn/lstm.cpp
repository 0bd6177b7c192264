#include "cel/nn/lstm.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "cel/random.hpp"

namespace cel::nn {

namespace {

Vector sigmoid(const Vector& z) {
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void check_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) {
    throw std::runtime_error(std::string("lstm_step: non-finite ") + what);
  }
}

// Everything the cell backward pass needs from one forward step.
struct StepCache {
  Vector x;
  Vector h_prev, c_prev;
  Vector f, i, g, o;
  Vector tanh_c;
};

double forward_impl(const ParameterSet& params, const Sample& sample,
                    std::vector<StepCache>* caches, Vector* h_final) {
  if (sample.inputs.empty()) throw std::invalid_argument("forward: empty sample");
  const int hidden = params.hidden_dim();
  LstmState state = zero_state(hidden);
  for (const Vector& x : sample.inputs) {
    if (caches) {
      StepCache c;
      c.x = x;
      c.h_prev = state.hidden;
      c.c_prev = state.cell;
      const Vector z = params.weight_ih * x + params.weight_hh * state.hidden +
                       params.bias_ih + params.bias_hh;
      c.f = sigmoid(z.segment(0, hidden));
      c.i = sigmoid(z.segment(hidden, hidden));
      c.g = z.segment(2 * hidden, hidden).array().tanh().matrix();
      c.o = sigmoid(z.segment(3 * hidden, hidden));
      state.cell = state.cell.cwiseProduct(c.f) + c.i.cwiseProduct(c.g);
      check_finite(state.cell, "cell state");
      c.tanh_c = state.cell.array().tanh().matrix();
      state.hidden = c.o.cwiseProduct(c.tanh_c);
      check_finite(state.hidden, "hidden state");
      caches->push_back(std::move(c));
    } else {
      state = lstm_step(params, state, x);
    }
  }
  if (h_final) *h_final = state.hidden;
  return params.linear_weight.dot(state.hidden) + params.linear_bias;
}

}  // namespace

std::int64_t parameter_count(int hidden_dim, int input_dim) {
  const std::int64_t h = hidden_dim, d = input_dim;
  return 4 * h * d + 4 * h * h + 8 * h + h + 1;
}

std::vector<ParameterGroup> parameter_layout(int hidden_dim, int input_dim) {
  const std::int64_t h = hidden_dim, d = input_dim;
  std::vector<ParameterGroup> layout;
  std::int64_t offset = 0;
  auto add = [&](const char* name, std::int64_t count) {
    layout.push_back({name, offset, count});
    offset += count;
  };
  add("lstm.weight_ih_10", 4 * h * d);
  add("lstm.weight_hh_10", 4 * h * h);
  add("lstm.bias_ih_10", 4 * h);
  add("lstm.bias_hh_10", 4 * h);
  add("linear.weight", h);
  add("linear.bias", 1);
  return layout;
}

namespace {

template <class Set>
Vector flatten_fields(const Set& s) {
  Vector flat(parameter_count(static_cast<int>(s.weight_hh.cols()),
                              static_cast<int>(s.weight_ih.cols())));
  std::int64_t pos = 0;
  auto put_matrix = [&](const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) flat[pos++] = m(r, c);
  };
  auto put_vector = [&](const Vector& v) {
    flat.segment(pos, v.size()) = v;
    pos += v.size();
  };
  put_matrix(s.weight_ih);
  put_matrix(s.weight_hh);
  put_vector(s.bias_ih);
  put_vector(s.bias_hh);
  put_vector(s.linear_weight);
  flat[pos++] = s.linear_bias;
  return flat;
}

template <class Set>
void unflatten_fields(const Vector& flat, Set& s) {
  if (flat.size() != parameter_count(static_cast<int>(s.weight_hh.cols()),
                                     static_cast<int>(s.weight_ih.cols()))) {
    throw std::invalid_argument("unflatten: size does not match parameter shapes");
  }
  std::int64_t pos = 0;
  auto take_matrix = [&](Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = flat[pos++];
  };
  auto take_vector = [&](Vector& v) {
    v = flat.segment(pos, v.size());
    pos += v.size();
  };
  take_matrix(s.weight_ih);
  take_matrix(s.weight_hh);
  take_vector(s.bias_ih);
  take_vector(s.bias_hh);
  take_vector(s.linear_weight);
  s.linear_bias = flat[pos++];
}

}  // namespace

Vector flatten(const ParameterSet& params) { return flatten_fields(params); }
Vector flatten(const GradientSet& grads) { return flatten_fields(grads); }
void unflatten(const Vector& flat, ParameterSet& params) { unflatten_fields(flat, params); }
void unflatten(const Vector& flat, GradientSet& grads) { unflatten_fields(flat, grads); }

ParameterSet zero_parameters(int hidden_dim, int input_dim) {
  require(hidden_dim >= 1, "hidden_dim must be >= 1");
  require(input_dim >= 1, "input_dim must be >= 1");
  ParameterSet p;
  p.weight_ih = Matrix::Zero(4 * hidden_dim, input_dim);
  p.weight_hh = Matrix::Zero(4 * hidden_dim, hidden_dim);
  p.bias_ih = Vector::Zero(4 * hidden_dim);
  p.bias_hh = Vector::Zero(4 * hidden_dim);
  p.linear_weight = Vector::Zero(hidden_dim);
  p.linear_bias = 0.0;
  return p;
}

GradientSet zero_gradients(int hidden_dim, int input_dim) {
  GradientSet g;
  g.weight_ih = Matrix::Zero(4 * hidden_dim, input_dim);
  g.weight_hh = Matrix::Zero(4 * hidden_dim, hidden_dim);
  g.bias_ih = Vector::Zero(4 * hidden_dim);
  g.bias_hh = Vector::Zero(4 * hidden_dim);
  g.linear_weight = Vector::Zero(hidden_dim);
  g.linear_bias = 0.0;
  return g;
}

ParameterSet init_parameters(int hidden_dim, int input_dim, std::uint64_t seed) {
  ParameterSet p = zero_parameters(hidden_dim, input_dim);
  std::mt19937_64 rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  Vector flat(parameter_count(hidden_dim, input_dim));
  for (Eigen::Index k = 0; k < flat.size(); ++k) {
    flat[k] = (2.0 * uniform_unit(rng) - 1.0) * scale;
  }
  unflatten(flat, p);
  return p;
}

LstmState zero_state(int hidden_dim) {
  return LstmState{Vector::Zero(hidden_dim), Vector::Zero(hidden_dim)};
}

LstmState lstm_step(const ParameterSet& params, const LstmState& state, const Vector& x) {
  const int hidden = params.hidden_dim();
  if (x.size() != params.input_dim()) {
    throw std::invalid_argument("lstm_step: input length does not match input_dim");
  }
  const Vector z =
      params.weight_ih * x + params.weight_hh * state.hidden + params.bias_ih + params.bias_hh;
  const Vector f = sigmoid(z.segment(0, hidden));
  check_finite(f, "forget gate");
  const Vector i = sigmoid(z.segment(hidden, hidden));
  check_finite(i, "input gate");
  const Vector g = z.segment(2 * hidden, hidden).array().tanh().matrix();
  check_finite(g, "candidate");
  const Vector o = sigmoid(z.segment(3 * hidden, hidden));
  check_finite(o, "output gate");
  LstmState next;
  next.cell = state.cell.cwiseProduct(f) + i.cwiseProduct(g);
  check_finite(next.cell, "cell state");
  next.hidden = o.cwiseProduct(next.cell.array().tanh().matrix());
  check_finite(next.hidden, "hidden state");
  return next;
}

double forward(const ParameterSet& params, const Sample& sample) {
  return forward_impl(params, sample, nullptr, nullptr);
}

double mse_loss(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size()) {
    throw std::invalid_argument("mse_loss: length mismatch");
  }
  if (predictions.empty()) throw std::invalid_argument("mse_loss: empty lists");
  double sum = 0.0;
  for (std::size_t m = 0; m < predictions.size(); ++m) {
    const double r = targets[m] - predictions[m];
    sum += r * r;
  }
  return sum / static_cast<double>(predictions.size());
}

double batch_mse(const ParameterSet& params, std::span<const Sample> batch) {
  if (batch.empty()) throw std::invalid_argument("batch_mse: empty batch");
  double sum = 0.0;
  for (const Sample& s : batch) {
    const double r = s.target - forward(params, s);
    sum += r * r;
  }
  return sum / static_cast<double>(batch.size());
}

BackwardResult backward(const ParameterSet& params, std::span<const Sample> batch,
                        const GradientSet* loss_grad_extra) {
  if (batch.empty()) throw std::invalid_argument("backward: empty batch");
  const int hidden = params.hidden_dim();
  const double k = static_cast<double>(batch.size());

  BackwardResult out;
  out.grads = zero_gradients(hidden, params.input_dim());
  GradientSet& grads = out.grads;
  double loss_sum = 0.0;

  std::vector<StepCache> caches;
  for (const Sample& sample : batch) {
    caches.clear();
    Vector h_final;
    const double prediction = forward_impl(params, sample, &caches, &h_final);
    const double residual = prediction - sample.target;
    loss_sum += residual * residual;

    const double dy = 2.0 * residual / k;
    grads.linear_weight += dy * h_final;
    grads.linear_bias += dy;

    Vector dh = dy * params.linear_weight;
    Vector dc = Vector::Zero(hidden);
    for (auto it = caches.rbegin(); it != caches.rend(); ++it) {
      const StepCache& c = *it;
      const Vector d_o = dh.cwiseProduct(c.tanh_c);
      dc += dh.cwiseProduct(c.o).cwiseProduct(
          (1.0 - c.tanh_c.array().square()).matrix());
      const Vector df = dc.cwiseProduct(c.c_prev);
      const Vector di = dc.cwiseProduct(c.g);
      const Vector dg = dc.cwiseProduct(c.i);

      Vector dz(4 * hidden);
      dz.segment(0, hidden) = df.array() * c.f.array() * (1.0 - c.f.array());
      dz.segment(hidden, hidden) = di.array() * c.i.array() * (1.0 - c.i.array());
      dz.segment(2 * hidden, hidden) = dg.array() * (1.0 - c.g.array().square());
      dz.segment(3 * hidden, hidden) = d_o.array() * c.o.array() * (1.0 - c.o.array());

      grads.weight_ih.noalias() += dz * c.x.transpose();
      grads.weight_hh.noalias() += dz * c.h_prev.transpose();
      grads.bias_ih += dz;
      grads.bias_hh += dz;

      dh.noalias() = params.weight_hh.transpose() * dz;
      dc = dc.cwiseProduct(c.f);
    }
  }
  out.loss = loss_sum / k;

  if (loss_grad_extra) {
    grads.weight_ih += loss_grad_extra->weight_ih;
    grads.weight_hh += loss_grad_extra->weight_hh;
    grads.bias_ih += loss_grad_extra->bias_ih;
    grads.bias_hh += loss_grad_extra->bias_hh;
    grads.linear_weight += loss_grad_extra->linear_weight;
    grads.linear_bias += loss_grad_extra->linear_bias;
  }

  if (!flatten(grads).allFinite()) {
    throw std::runtime_error("backward: non-finite gradient");
  }
  return out;
}

GradientSet finite_difference_gradient(const ParameterSet& params, std::span<const Sample> batch,
                                       double step) {
  if (step <= 0.0) throw std::invalid_argument("finite_difference_gradient: step must be > 0");
  ParameterSet scratch = params;
  Vector theta = flatten(params);
  Vector grad(theta.size());
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    const double saved = theta[k];
    theta[k] = saved + step;
    unflatten(theta, scratch);
    const double plus = batch_mse(scratch, batch);
    theta[k] = saved - step;
    unflatten(theta, scratch);
    const double minus = batch_mse(scratch, batch);
    theta[k] = saved;
    grad[k] = (plus - minus) / (2.0 * step);
  }
  unflatten(theta, scratch);
  GradientSet out = zero_gradients(params.hidden_dim(), params.input_dim());
  unflatten(grad, out);
  return out;
}

}  // namespace cel::nn
