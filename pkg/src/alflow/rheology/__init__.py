from .models import (FAMILIES, ActivatedEuler, BinghamBE, BinghamPapanastasiou, CarreauYasuda,
                     ConstitutiveModel, EulerPowerLaw, Newtonian, eff_viscosity, eff_viscosity_field,
                     eval_dG, eval_G, make_model, sqnorm)
