// SPDX-License-Identifier: Apache-2.0
#include "zkmap/ast.hpp"

namespace zkmap {

std::string type_name(const Type& t) {
    switch (t.kind) {
    case TypeKind::Uint: return "uint";
    case TypeKind::Bool: return "bool";
    case TypeKind::Address: return "address";
    case TypeKind::Void: return "void";
    case TypeKind::Mapping: {
        std::string key = type_name(Type::scalar(t.key));
        std::string value = t.value ? type_name(*t.value) : "?";
        return "mapping(" + key + " => " + value + ")";
    }
    }
    return "?";
}

} // namespace zkmap
