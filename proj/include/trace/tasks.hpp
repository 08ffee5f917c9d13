#pragma once

#include <cstdint>
#include <string>

#include "trace/operators.hpp"
#include "trace/tensor.hpp"

namespace trace {

enum class TaskKind {
  inpaint50,
  inpaint70,
  sr2,
  sr4,
  motion,
  nonlinear,  // anisotropic Gaussian blur + clip
  ct_sparse,
  ct_limited,
};

TaskKind task_from_string(const std::string& name);
std::string to_string(TaskKind kind);

struct TaskSpec {
  TaskKind kind = TaskKind::inpaint50;
  uint64_t seed = 0;
  int views = 0;                   // CT only; 0 = default (60 sparse / 120 limited)
  double missing_fraction = 0.0;   // inpainting only; 0 = kind default
};

struct Degraded {
  Tensor y;
  ForwardOperator op;
};

// Builds the task's operator for the ground truth's geometry and measures it,
// y = A(x_true), with no added noise.
Degraded degrade(const TaskSpec& task, const Tensor& x_true);

ForwardOperator make_task_operator(const TaskSpec& task, int channels, int h, int w);

}  // namespace trace
