#include "loongx/numerics/optim.h"

#include <cmath>
#include <set>

#include "loongx/numerics/errors.h"

namespace loongx {

void AdamW::step(const ParamList& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (auto* p : params) {
    if (!p->requires_grad) continue;
    auto& m = m_[p->name];
    auto& v = v_[p->name];
    if (m.shape() != p->value.shape()) {
      m = Tensor::zeros(p->value.shape());
      v = Tensor::zeros(p->value.shape());
    }
    if (p->grad.shape() != p->value.shape()) p->grad = Tensor::zeros(p->value.shape());
    for (std::size_t i = 0; i < p->value.numel(); ++i) {
      const double g = p->grad[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      double& w = p->value[i];
      w -= cfg_.lr * cfg_.weight_decay * w;
      w -= cfg_.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg_.eps);
    }
    if (!p->value.all_finite()) throw NonFiniteError("AdamW produced non-finite " + p->name);
  }
}

void AdamW::zero_grad(const ParamList& params) const {
  for (auto* p : params) p->zero_grad();
}

void AdamW::save(Checkpoint& ck, const std::string& prefix) const {
  for (const auto& [k, t] : m_) ck.tensors[prefix + "m/" + k] = t;
  for (const auto& [k, t] : v_) ck.tensors[prefix + "v/" + k] = t;
  ck.meta[prefix + "t"] = std::to_string(t_);
  ck.meta[prefix + "lr"] = fmt_double(cfg_.lr);
  ck.meta[prefix + "weight_decay"] = fmt_double(cfg_.weight_decay);
}

void AdamW::load(const Checkpoint& ck, const std::string& prefix) {
  m_.clear();
  v_.clear();
  const std::string pm = prefix + "m/", pv = prefix + "v/";
  for (const auto& [k, t] : ck.tensors) {
    if (k.rfind(pm, 0) == 0) m_[k.substr(pm.size())] = t;
    if (k.rfind(pv, 0) == 0) v_[k.substr(pv.size())] = t;
  }
  const auto it = ck.meta.find(prefix + "t");
  t_ = it == ck.meta.end() ? 0 : std::stoll(it->second);
}

void store_params(Checkpoint& ck, const ParamList& params, const std::string& prefix) {
  for (auto* p : params) ck.tensors[prefix + p->name] = p->value;
}

void restore_params(const Checkpoint& ck, const ParamList& params, const std::string& prefix) {
  for (auto* p : params) {
    const auto it = ck.tensors.find(prefix + p->name);
    if (it == ck.tensors.end()) throw DataError("checkpoint lacks parameter " + prefix + p->name);
    if (it->second.shape() != p->value.shape()) {
      throw DataError("checkpoint shape mismatch for " + p->name + ": " +
                      shape_str(it->second.shape()) + " vs " + shape_str(p->value.shape()));
    }
    p->value = it->second;
    p->zero_grad();
  }
}

std::size_t count_params(const ParamList& params) {
  std::size_t n = 0;
  for (auto* p : params) n += p->value.numel();
  return n;
}

void check_unique_names(const ParamList& params) {
  std::set<std::string> seen;
  for (auto* p : params) {
    if (!seen.insert(p->name).second) throw std::logic_error("duplicate parameter name " + p->name);
  }
}

std::uint64_t hash_params(const ParamList& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto* p : params) {
    h = fnv1a64(p->name, h);
    const auto d = p->value.data();
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(d.data()), d.size() * sizeof(double)), h);
  }
  return h;
}

}  // namespace loongx
