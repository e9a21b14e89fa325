#include <stdio.h>
#include "paircat.h"

int main(void) {
    PaircatLadder *ladder = NULL;
    if (paircat_pair_cat_new(10.0, 0.0, 1, 1.5707963267948966, 1e-12, &ladder) != PAIRCAT_STATUS_OK) {
        fprintf(stderr, "%s\n", paircat_last_error());
        return 1;
    }
    PaircatProfile *profile = NULL;
    PaircatJoint *start = NULL, *later = NULL;
    paircat_profile_constant(1.0, &profile);
    paircat_joint_new(ladder, 0, &start);
    paircat_joint_evolve(start, profile, 0.15, &later);
    PaircatObservables obs;
    paircat_joint_observables(later, &obs);
    printf("W = %.6f  S = %.6f\n", obs.inversion, obs.s_vn_atom);

    if (paircat_profile_sinh(1.0, -1.0, &profile) != PAIRCAT_STATUS_OK)
        printf("rejected: %s\n", paircat_last_error());

    paircat_joint_free(later);
    paircat_joint_free(start);
    paircat_profile_free(profile);
    paircat_ladder_free(ladder);
    return 0;
}
