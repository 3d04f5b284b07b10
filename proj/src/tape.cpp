#include "aglm/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace aglm {

std::string shape_to_string(const std::vector<int>& shape) {
  std::string out = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " +
                              shape_to_string(a.shape) + " and " +
                              shape_to_string(b.shape));
}

}  // namespace

VarId Tape::push(Tensor value, std::function<void(Tape&, const Node&)> backward_fn) {
  // non-finite values are allowed to flow; the trainer detects and aborts
  nodes_.push_back(Node{std::move(value), Tensor{}, std::move(backward_fn)});
  return static_cast<VarId>(nodes_.size() - 1);
}

Tensor& Tape::grad_buf(VarId id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (n.grad.data.empty()) {
    n.grad.shape = n.value.shape;
    n.grad.data.assign(n.value.size(), 0.0);
  }
  return n.grad;
}

void Tape::check_vector(VarId id, const char* op) const {
  if (value(id).rank() != 1) {
    throw std::invalid_argument(std::string(op) + ": expected rank-1 tensor, got " +
                                shape_to_string(value(id).shape));
  }
}

VarId Tape::input(Tensor value, bool requires_grad) {
  // Inputs that don't require gradients still live on the tape; their grad
  // buffers are simply never read.
  (void)requires_grad;
  return push(std::move(value), nullptr);
}

VarId Tape::matmul(VarId a, VarId b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (bv.rank() != 2 || (av.rank() != 1 && av.rank() != 2)) shape_error("matmul", av, bv);
  bool vec = av.rank() == 1;
  int m = vec ? 1 : av.dim(0);
  int k = vec ? av.dim(0) : av.dim(1);
  int n = bv.dim(1);
  if (bv.dim(0) != k) shape_error("matmul", av, bv);
  Tensor out(vec ? std::vector<int>{n} : std::vector<int>{m, n});
  for (int i = 0; i < m; ++i) {
    for (int kk = 0; kk < k; ++kk) {
      double x = av.data[static_cast<size_t>(i) * k + kk];
      if (x == 0.0) continue;
      const double* brow = &bv.data[static_cast<size_t>(kk) * n];
      double* orow = &out.data[static_cast<size_t>(i) * n];
      for (int j = 0; j < n; ++j) orow[j] += x * brow[j];
    }
  }
  return push(std::move(out), [a, b, m, k, n](Tape& t, const Node& self) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    Tensor& da = t.grad_buf(a);
    Tensor& db = t.grad_buf(b);
    for (int i = 0; i < m; ++i) {
      const double* grow = &self.grad.data[static_cast<size_t>(i) * n];
      for (int kk = 0; kk < k; ++kk) {
        const double* brow = &bv.data[static_cast<size_t>(kk) * n];
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
        da.data[static_cast<size_t>(i) * k + kk] += acc;
        double x = av.data[static_cast<size_t>(i) * k + kk];
        if (x != 0.0) {
          double* dbrow = &db.data[static_cast<size_t>(kk) * n];
          for (int j = 0; j < n; ++j) dbrow[j] += x * grow[j];
        }
      }
    }
  });
}

VarId Tape::conv1d(VarId seq, VarId filters, VarId bias) {
  const Tensor& sv = value(seq);
  const Tensor& fv = value(filters);
  const Tensor& biasv = value(bias);
  if (sv.rank() != 2 || fv.rank() != 3 || biasv.rank() != 1) shape_error("conv1d", sv, fv);
  int L = sv.dim(0), d = sv.dim(1);
  int w = fv.dim(0), fd = fv.dim(1), f = fv.dim(2);
  if (fd != d || biasv.dim(0) != f) shape_error("conv1d", sv, fv);
  if (L < w) {
    throw std::invalid_argument("conv1d: sequence shorter than filter width; pad first");
  }
  int T = L - w + 1;
  Tensor out({T, f});
  for (int t = 0; t < T; ++t) {
    double* orow = &out.data[static_cast<size_t>(t) * f];
    for (int j = 0; j < f; ++j) orow[j] = biasv.data[static_cast<size_t>(j)];
    for (int i = 0; i < w; ++i) {
      const double* srow = &sv.data[static_cast<size_t>(t + i) * d];
      for (int c = 0; c < d; ++c) {
        double x = srow[c];
        if (x == 0.0) continue;
        const double* frow = &fv.data[(static_cast<size_t>(i) * d + c) * f];
        for (int j = 0; j < f; ++j) orow[j] += x * frow[j];
      }
    }
  }
  return push(std::move(out), [seq, filters, bias, T, w, d, f](Tape& t, const Node& self) {
    const Tensor& sv = t.value(seq);
    const Tensor& fv = t.value(filters);
    Tensor& ds = t.grad_buf(seq);
    Tensor& df = t.grad_buf(filters);
    Tensor& db = t.grad_buf(bias);
    for (int tt = 0; tt < T; ++tt) {
      const double* grow = &self.grad.data[static_cast<size_t>(tt) * f];
      for (int j = 0; j < f; ++j) db.data[static_cast<size_t>(j)] += grow[j];
      for (int i = 0; i < w; ++i) {
        const double* srow = &sv.data[static_cast<size_t>(tt + i) * d];
        double* dsrow = &ds.data[static_cast<size_t>(tt + i) * d];
        for (int c = 0; c < d; ++c) {
          const double* frow = &fv.data[(static_cast<size_t>(i) * d + c) * f];
          double* dfrow = &df.data[(static_cast<size_t>(i) * d + c) * f];
          double acc = 0.0;
          double x = srow[c];
          for (int j = 0; j < f; ++j) {
            acc += grow[j] * frow[j];
            dfrow[j] += x * grow[j];
          }
          dsrow[c] += acc;
        }
      }
    }
  });
}

VarId Tape::max_over_time(VarId x) {
  const Tensor& xv = value(x);
  if (xv.rank() != 2 || xv.dim(0) < 1) {
    throw std::invalid_argument("max_over_time: need a non-empty [T,f] tensor, got " +
                                shape_to_string(xv.shape));
  }
  int T = xv.dim(0), f = xv.dim(1);
  Tensor out({f});
  std::vector<int> argmax(static_cast<size_t>(f), 0);
  for (int j = 0; j < f; ++j) {
    double best = xv.at(0, j);
    for (int t = 1; t < T; ++t) {
      if (xv.at(t, j) > best) {  // strict: first occurrence wins on ties
        best = xv.at(t, j);
        argmax[static_cast<size_t>(j)] = t;
      }
    }
    out.at(j) = best;
  }
  return push(std::move(out), [x, f, argmax = std::move(argmax)](Tape& t, const Node& self) {
    Tensor& dx = t.grad_buf(x);
    for (int j = 0; j < f; ++j) {
      dx.at(argmax[static_cast<size_t>(j)], j) += self.grad.at(j);
    }
  });
}

VarId Tape::sigmoid(VarId x) {
  Tensor out = value(x);
  for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
  VarId id = push(std::move(out), nullptr);
  nodes_.back().backward_fn = [x, id](Tape& t, const Node& self) {
    const Tensor& y = t.value(id);
    Tensor& dx = t.grad_buf(x);
    for (size_t i = 0; i < y.size(); ++i) {
      dx.data[i] += self.grad.data[i] * y.data[i] * (1.0 - y.data[i]);
    }
  };
  return id;
}

VarId Tape::tanh(VarId x) {
  Tensor out = value(x);
  for (double& v : out.data) v = std::tanh(v);
  VarId id = push(std::move(out), nullptr);
  nodes_.back().backward_fn = [x, id](Tape& t, const Node& self) {
    const Tensor& y = t.value(id);
    Tensor& dx = t.grad_buf(x);
    for (size_t i = 0; i < y.size(); ++i) {
      dx.data[i] += self.grad.data[i] * (1.0 - y.data[i] * y.data[i]);
    }
  };
  return id;
}

VarId Tape::add(VarId a, VarId b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (!av.same_shape(bv)) shape_error("add", av, bv);
  Tensor out = av;
  for (size_t i = 0; i < out.size(); ++i) out.data[i] += bv.data[i];
  return push(std::move(out), [a, b](Tape& t, const Node& self) {
    Tensor& da = t.grad_buf(a);
    Tensor& db = t.grad_buf(b);
    for (size_t i = 0; i < self.grad.size(); ++i) {
      da.data[i] += self.grad.data[i];
      db.data[i] += self.grad.data[i];
    }
  });
}

VarId Tape::sub(VarId a, VarId b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (!av.same_shape(bv)) shape_error("sub", av, bv);
  Tensor out = av;
  for (size_t i = 0; i < out.size(); ++i) out.data[i] -= bv.data[i];
  return push(std::move(out), [a, b](Tape& t, const Node& self) {
    Tensor& da = t.grad_buf(a);
    Tensor& db = t.grad_buf(b);
    for (size_t i = 0; i < self.grad.size(); ++i) {
      da.data[i] += self.grad.data[i];
      db.data[i] -= self.grad.data[i];
    }
  });
}

VarId Tape::mul(VarId a, VarId b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (!av.same_shape(bv)) shape_error("mul", av, bv);
  Tensor out = av;
  for (size_t i = 0; i < out.size(); ++i) out.data[i] *= bv.data[i];
  return push(std::move(out), [a, b](Tape& t, const Node& self) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    Tensor& da = t.grad_buf(a);
    Tensor& db = t.grad_buf(b);
    for (size_t i = 0; i < self.grad.size(); ++i) {
      da.data[i] += self.grad.data[i] * bv.data[i];
      db.data[i] += self.grad.data[i] * av.data[i];
    }
  });
}

VarId Tape::concat(const std::vector<VarId>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no parts");
  int total = 0;
  for (VarId p : parts) {
    check_vector(p, "concat");
    total += value(p).dim(0);
  }
  Tensor out({total});
  int offset = 0;
  for (VarId p : parts) {
    const Tensor& pv = value(p);
    std::copy(pv.data.begin(), pv.data.end(), out.data.begin() + offset);
    offset += pv.dim(0);
  }
  return push(std::move(out), [parts](Tape& t, const Node& self) {
    int offset = 0;
    for (VarId p : parts) {
      Tensor& dp = t.grad_buf(p);
      for (size_t i = 0; i < dp.size(); ++i) {
        dp.data[i] += self.grad.data[static_cast<size_t>(offset) + i];
      }
      offset += static_cast<int>(dp.size());
    }
  });
}

VarId Tape::slice(VarId x, int begin, int length) {
  check_vector(x, "slice");
  const Tensor& xv = value(x);
  if (begin < 0 || length <= 0 || begin + length > xv.dim(0)) {
    throw std::invalid_argument("slice: range out of bounds");
  }
  Tensor out({length});
  std::copy(xv.data.begin() + begin, xv.data.begin() + begin + length, out.data.begin());
  return push(std::move(out), [x, begin](Tape& t, const Node& self) {
    Tensor& dx = t.grad_buf(x);
    for (size_t i = 0; i < self.grad.size(); ++i) {
      dx.data[static_cast<size_t>(begin) + i] += self.grad.data[i];
    }
  });
}

VarId Tape::rows(VarId table, std::vector<int> ids) {
  const Tensor& tv = value(table);
  if (tv.rank() != 2) {
    throw std::invalid_argument("rows: table must be rank 2, got " +
                                shape_to_string(tv.shape));
  }
  int V = tv.dim(0), d = tv.dim(1);
  for (int id : ids) {
    if (id < 0 || id >= V) throw std::out_of_range("rows: id out of vocabulary range");
  }
  Tensor out({static_cast<int>(ids.size()), d});
  for (size_t i = 0; i < ids.size(); ++i) {
    const double* src = &tv.data[static_cast<size_t>(ids[i]) * d];
    std::copy(src, src + d, &out.data[i * static_cast<size_t>(d)]);
  }
  return push(std::move(out), [table, d, ids = std::move(ids)](Tape& t, const Node& self) {
    Tensor& dt = t.grad_buf(table);
    for (size_t i = 0; i < ids.size(); ++i) {
      double* dst = &dt.data[static_cast<size_t>(ids[i]) * d];
      const double* src = &self.grad.data[i * static_cast<size_t>(d)];
      for (int j = 0; j < d; ++j) dst[j] += src[j];
    }
  });
}

VarId Tape::reshape(VarId x, std::vector<int> shape) {
  const Tensor& xv = value(x);
  if (Tensor::element_count(shape) != xv.size()) {
    throw std::invalid_argument("reshape: element count mismatch for " +
                                shape_to_string(xv.shape) + " -> " +
                                shape_to_string(shape));
  }
  Tensor out(std::move(shape), xv.data);
  return push(std::move(out), [x](Tape& t, const Node& self) {
    Tensor& dx = t.grad_buf(x);
    for (size_t i = 0; i < self.grad.size(); ++i) dx.data[i] += self.grad.data[i];
  });
}

VarId Tape::log_softmax(VarId logits) {
  check_vector(logits, "log_softmax");
  const Tensor& lv = value(logits);
  double max = lv.data[0];
  for (double v : lv.data) max = std::max(max, v);
  double sum = 0.0;
  for (double v : lv.data) sum += std::exp(v - max);
  double lse = max + std::log(sum);
  Tensor out = lv;
  for (double& v : out.data) v -= lse;
  VarId id = push(std::move(out), nullptr);
  nodes_.back().backward_fn = [logits, id](Tape& t, const Node& self) {
    const Tensor& y = t.value(id);
    Tensor& dx = t.grad_buf(logits);
    double gsum = 0.0;
    for (double g : self.grad.data) gsum += g;
    for (size_t i = 0; i < y.size(); ++i) {
      dx.data[i] += self.grad.data[i] - std::exp(y.data[i]) * gsum;
    }
  };
  return id;
}

VarId Tape::nll(VarId log_probs, int target) {
  check_vector(log_probs, "nll");
  const Tensor& lv = value(log_probs);
  if (target < 0 || target >= lv.dim(0)) {
    throw std::out_of_range("nll: target id out of range");
  }
  Tensor out = Tensor::scalar(-lv.at(target));
  return push(std::move(out), [log_probs, target](Tape& t, const Node& self) {
    t.grad_buf(log_probs).at(target) -= self.grad.data[0];
  });
}

VarId Tape::add_scalars(const std::vector<VarId>& scalars) {
  if (scalars.empty()) throw std::invalid_argument("add_scalars: no terms");
  double sum = 0.0;
  for (VarId s : scalars) {
    if (value(s).rank() != 0) throw std::invalid_argument("add_scalars: non-scalar term");
    sum += value(s).data[0];
  }
  return push(Tensor::scalar(sum), [scalars](Tape& t, const Node& self) {
    for (VarId s : scalars) t.grad_buf(s).data[0] += self.grad.data[0];
  });
}

void Tape::backward(VarId loss) {
  if (value(loss).rank() != 0) {
    throw std::invalid_argument("backward: loss must be a scalar");
  }
  grad_buf(loss).data[0] = 1.0;
  for (size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward_fn && !n.grad.data.empty()) {
      n.backward_fn(*this, n);
    }
  }
}

}  // namespace aglm
