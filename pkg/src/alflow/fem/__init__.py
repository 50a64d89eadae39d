from .blockfield import BlockField, Spaces, scott_vogelius
from .element import (ReferenceElement, QuadratureRule, interval_quadrature, lagrange_element,
                      lagrange_nodes, triangle_quadrature)
from .space import (C0, DG, SCALAR, SYMTRACELESS, VECTOR, CellGeometry, Function, FunctionSpace,
                    dev_strain, eval_field, interpolate, make_space, norm, tensor_inner)
from .vtk import write_vtk

norms = norm
