from flowguard.attacks.pgd import (
    AdversarialSet,
    AttackBudget,
    attack_success_rate,
    classifier_checksum,
    pgd_attack,
    pgd_loss,
)

__all__ = [
    "AdversarialSet", "AttackBudget", "attack_success_rate", "classifier_checksum",
    "pgd_attack", "pgd_loss",
]
