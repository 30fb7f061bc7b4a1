#pragma once

#include "qtomo/error.hpp"
#include "qtomo/numerics.hpp"
#include "qtomo/partitions.hpp"
#include "qtomo/repr.hpp"
#include "qtomo/schur_stream.hpp"
#include "qtomo/povm.hpp"
#include "qtomo/tomography.hpp"
#include "qtomo/povm_exec.hpp"
#include "qtomo/harness.hpp"
