#ifndef ASMFS_ASMFS_HPP
#define ASMFS_ASMFS_HPP

#include "asmfs/common.hpp"
#include "asmfs/data_model.hpp"
#include "asmfs/similarity.hpp"
#include "asmfs/feature_selection.hpp"
#include "asmfs/folds.hpp"
#include "asmfs/classify.hpp"
#include "asmfs/evaluation.hpp"
#include "asmfs/synthetic.hpp"

#endif  // ASMFS_ASMFS_HPP
