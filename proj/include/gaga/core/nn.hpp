#pragma once

#include <map>
#include <string>

#include "gaga/core/conv.hpp"
#include "gaga/core/rng.hpp"

namespace gaga::nn {

// Name -> parameter map. Names are stable across runs (they seed the
// initializer), which makes checkpoints and optimizer state portable.
template <typename T>
class ParamRegistry {
 public:
  void add(const std::string& name, Var<T> v) {
    if (map_.count(name)) throw std::logic_error("duplicate parameter name: " + name);
    map_.emplace(name, std::move(v));
  }
  const std::map<std::string, Var<T>>& all() const { return map_; }
  Var<T> find(const std::string& name) const {
    auto it = map_.find(name);
    return it == map_.end() ? nullptr : it->second;
  }
  void merge(const ParamRegistry& o) {
    for (const auto& [k, v] : o.map_) add(k, v);
  }
  int64_t total_elements() const {
    int64_t n = 0;
    for (const auto& [k, v] : map_) n += v->value.numel();
    return n;
  }

 private:
  std::map<std::string, Var<T>> map_;
};

template <typename T>
Tensor<T> he_normal(std::vector<int64_t> dims, int64_t fan_in, uint64_t seed,
                    const std::string& name, double gain = 1.0) {
  Tensor<T> t(dims);
  Rng rng = Rng::stream(seed, "init:" + name);
  double stddev = gain * std::sqrt(2.0 / static_cast<double>(fan_in));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(rng.normal(0.0, stddev));
  return t;
}

template <typename T>
struct Conv {
  std::string name;
  Var<T> w, b;
  int64_t stride = 1, pad = 1;

  static Conv create(const std::string& name, int64_t cin, int64_t cout, int64_t k,
                     int64_t stride, int64_t pad, uint64_t seed, double gain = 1.0) {
    Conv c;
    c.name = name;
    c.w = make_var<T>(he_normal<T>({cout, cin, k, k}, cin * k * k, seed, name + ".w", gain), true);
    c.b = make_var<T>(Tensor<T>({cout}), true);
    c.stride = stride;
    c.pad = pad;
    return c;
  }

  Var<T> operator()(const Var<T>& x) const { return ops::conv2d(x, w, b, stride, pad); }

  void params(ParamRegistry<T>& reg) const {
    reg.add(name + ".w", w);
    reg.add(name + ".b", b);
  }
};

template <typename T>
struct Linear {
  std::string name;
  Var<T> w, b;

  static Linear create(const std::string& name, int64_t din, int64_t dout, uint64_t seed,
                       double gain = 1.0) {
    Linear l;
    l.name = name;
    l.w = make_var<T>(he_normal<T>({dout, din}, din, seed, name + ".w", gain), true);
    l.b = make_var<T>(Tensor<T>({dout}), true);
    return l;
  }

  Var<T> operator()(const Var<T>& x) const { return ops::linear(x, w, b); }

  void params(ParamRegistry<T>& reg) const {
    reg.add(name + ".w", w);
    reg.add(name + ".b", b);
  }
};

// Two 3x3 convolutions with an additive skip.
template <typename T>
struct Residual {
  Conv<T> c1, c2;

  static Residual create(const std::string& name, int64_t ch, uint64_t seed) {
    Residual r;
    r.c1 = Conv<T>::create(name + ".c1", ch, ch, 3, 1, 1, seed);
    r.c2 = Conv<T>::create(name + ".c2", ch, ch, 3, 1, 1, seed, 0.5);
    return r;
  }

  Var<T> operator()(const Var<T>& x) const {
    return ops::add(x, c2(ops::relu(c1(ops::relu(x)))));
  }

  void params(ParamRegistry<T>& reg) const {
    c1.params(reg);
    c2.params(reg);
  }
};

// Four fully connected layers with rectifier nonlinearities between
// them; final layer linear. Used for both latent mappers and critics.
template <typename T>
struct Mlp4 {
  Linear<T> l1, l2, l3, l4;
  bool leaky = false;

  static Mlp4 create(const std::string& name, int64_t din, int64_t hidden, int64_t dout,
                     uint64_t seed, bool leaky = false, double out_gain = 1.0) {
    Mlp4 m;
    m.l1 = Linear<T>::create(name + ".l1", din, hidden, seed);
    m.l2 = Linear<T>::create(name + ".l2", hidden, hidden, seed);
    m.l3 = Linear<T>::create(name + ".l3", hidden, hidden, seed);
    m.l4 = Linear<T>::create(name + ".l4", hidden, dout, seed, out_gain);
    m.leaky = leaky;
    return m;
  }

  Var<T> operator()(const Var<T>& x) const {
    auto act = [this](const Var<T>& v) { return leaky ? ops::leaky_relu(v, T(0.2)) : ops::relu(v); };
    return l4(act(l3(act(l2(act(l1(x)))))));
  }

  void params(ParamRegistry<T>& reg) const {
    l1.params(reg);
    l2.params(reg);
    l3.params(reg);
    l4.params(reg);
  }
};

template <typename T>
void set_requires_grad(ParamRegistry<T>& reg, bool on) {
  for (auto& [name, v] : reg.all()) const_cast<Node<T>&>(*v).requires_grad = on;
}

template <typename T>
void zero_grads(const ParamRegistry<T>& reg) {
  for (const auto& [name, v] : reg.all()) v->zero_grad();
}

}  // namespace gaga::nn
