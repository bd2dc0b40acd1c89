#ifndef GRAPHNNK_GRAPHNNK_HPP
#define GRAPHNNK_GRAPHNNK_HPP

#include "cholesky.hpp"
#include "errors.hpp"
#include "gin.hpp"
#include "graph.hpp"
#include "knn.hpp"
#include "matrix.hpp"
#include "metrics.hpp"
#include "nnk.hpp"
#include "pipeline.hpp"
#include "serialization.hpp"
#include "synthetic.hpp"
#include "trainer.hpp"
#include "tu_format.hpp"

#endif
