#include "fog/types.hpp"

namespace fog {

SemanticLabeling SemanticLabeling::class_view() const {
  SemanticLabeling out = *this;
  if (id_to_class.empty()) {
    out.instance_aware = false;
    return out;
  }
  for (Eigen::Index x = 0; x < ids.cols(); ++x)
    for (Eigen::Index y = 0; y < ids.rows(); ++y) {
      const int id = ids(y, x);
      out.ids(y, x) = id == kVoidLabel ? kVoidLabel : class_of(id);
    }
  out.instance_aware = false;
  out.id_to_class.clear();
  return out;
}

}  // namespace fog
