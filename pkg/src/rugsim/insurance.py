"""Decentralized insurance: bonded policies, claims with joiners, disputes,
community voting, escalation, and pooled bond slashing.

Uses the same dispute kernel as the issuance-claim game; only the payout
table differs. A disputed outcome stays provisional for an escalation
window during which either party can buy a fresh voting round by posting
its previous bond times the escalation multiplier; the losing party's
escalation bonds are forfeited to the winning party.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

from .core import (
    AccountId,
    BlockTime,
    FixedAmount,
    ONE,
    ParameterError,
    QUANTUM,
    StateError,
    TokenId,
    ZERO,
    amt,
)
from .disputes import CaseEscrow, Resolution, Transfer, VoteBox, pro_rata
from .ledger import BalanceError, Ledger

SIDE_APPROVE = "approve"
SIDE_REJECT = "reject"


class PolicyStatus(enum.Enum):
    ACTIVE = "active"
    CLAIMED = "claimed"
    EXPIRED = "expired"


class ClaimPhase(enum.Enum):
    CHALLENGEABLE = "challengeable"
    VOTING = "voting"
    PENDING_FINAL = "pending_final"
    APPROVED = "approved"
    REJECTED = "rejected"


@dataclass(frozen=True)
class InsuranceParams:
    alpha_comp: FixedAmount            # insurer-bond share paid to the claim side
    gamma_pen: FixedAmount             # slash fraction on claim-side bonds
    escalation_bond_multiplier: FixedAmount = amt(2)
    max_escalations: int = 2
    tau_challenge: int = 10
    tau_vote: int = 10
    escalation_window: int = 5
    x_min: FixedAmount = amt("0.01")
    vote_min_deposit: FixedAmount = QUANTUM

    def __post_init__(self):
        for name in ("alpha_comp", "gamma_pen"):
            v = getattr(self, name)
            if not (ZERO <= v <= ONE):
                raise ParameterError(f"{name} must be in [0, 1], got {v}")
        if self.escalation_bond_multiplier <= ONE:
            raise ParameterError("escalation multiplier must be > 1")
        if min(self.tau_challenge, self.tau_vote, self.escalation_window) <= 0:
            raise ParameterError("windows must be > 0 blocks")
        if self.max_escalations < 0:
            raise ParameterError("max_escalations must be >= 0")


@dataclass
class Policy:
    policy_id: str
    insurer: AccountId
    insured: AccountId
    insured_value: FixedAmount
    insurer_bond: FixedAmount
    duration_blocks: int
    issued_at: int
    status: PolicyStatus = PolicyStatus.ACTIVE

    @property
    def expires_at(self) -> int:
        return self.issued_at + self.duration_blocks


@dataclass
class Joiner:
    account: AccountId
    loss_claimed: FixedAmount
    bond: FixedAmount


@dataclass
class Dispute:
    challenger: AccountId
    bond: FixedAmount
    opened_at: int


@dataclass
class EscalationBond:
    party: str  # account id of the posting party
    amount: FixedAmount
    level: int


@dataclass
class InsuranceClaim:
    claim_id: str
    policy_id: str
    claimant: AccountId
    claim_bond: FixedAmount
    loss_claimed: FixedAmount
    opened_at: int
    challenge_end: int
    phase: ClaimPhase = ClaimPhase.CHALLENGEABLE
    joiners: list[Joiner] = field(default_factory=list)
    dispute: Optional[Dispute] = None
    votes: Optional[VoteBox] = None
    vote_end: int = 0
    escalation_level: int = 0
    escalation_bonds: list[EscalationBond] = field(default_factory=list)
    past_votes: list[VoteBox] = field(default_factory=list)
    pending_outcome: Optional[str] = None
    decided_at: int = 0
    last_bond: dict[str, FixedAmount] = field(default_factory=dict)


class InsuranceBook:
    """State machines for policies and their claims, in one settlement token."""

    def __init__(self, params: InsuranceParams, token: TokenId,
                 treasury: str = "treasury"):
        self.params = params
        self.token = token
        self.treasury = treasury
        self.policies: dict[str, Policy] = {}
        self.claims: dict[str, InsuranceClaim] = {}
        self._escrows: dict[str, CaseEscrow] = {}
        self._counter = 1

    def _escrow_for(self, ledger: Ledger, case_id: str) -> CaseEscrow:
        escrow = self._escrows.get(case_id)
        if escrow is None:
            escrow = CaseEscrow(ledger, f"icase:{case_id}", self.token)
            self._escrows[case_id] = escrow
        return escrow

    # -- issuance --------------------------------------------------------

    def issue_policy(self, ledger: Ledger, insurer: AccountId, insured: AccountId,
                     insured_value: FixedAmount, x_fraction: FixedAmount,
                     duration_blocks: int, at: BlockTime) -> Policy:
        if insured_value.raw <= 0:
            raise ParameterError("insured value must be > 0")
        if duration_blocks <= 0:
            raise ParameterError("duration must be > 0 blocks")
        if x_fraction < self.params.x_min:
            raise ParameterError(
                f"bond fraction {x_fraction} below floor {self.params.x_min}")
        bond = x_fraction * insured_value
        if ledger.balance(insurer.value, self.token) < bond:
            raise BalanceError(f"insurer cannot cover the bond of {bond}")
        policy_id = f"pol-{self._counter}"
        self._counter += 1
        escrow = self._escrow_for(ledger, policy_id)
        escrow.take(insurer.value, bond, "insurer-bond")
        policy = Policy(policy_id=policy_id, insurer=insurer, insured=insured,
                        insured_value=insured_value, insurer_bond=bond,
                        duration_blocks=duration_blocks, issued_at=at.height)
        self.policies[policy_id] = policy
        return policy

    def open_claim_for(self, policy_id: str) -> Optional[InsuranceClaim]:
        for claim in self.claims.values():
            if claim.policy_id == policy_id and claim.phase not in (
                    ClaimPhase.APPROVED, ClaimPhase.REJECTED):
                return claim
        return None

    def expire_policy(self, ledger: Ledger, policy_id: str, at: BlockTime) -> None:
        policy = self.policies[policy_id]
        if policy.status is not PolicyStatus.ACTIVE:
            raise StateError(f"policy {policy_id} is {policy.status.value}")
        if at.height < policy.expires_at:
            raise StateError(f"policy {policy_id} runs until {policy.expires_at}")
        if self.open_claim_for(policy_id) is not None:
            raise StateError(f"policy {policy_id} has an open claim")
        escrow = self._escrows[policy_id]
        escrow.pay(policy.insurer.value, policy.insurer_bond, "bond-release")
        escrow.close()
        policy.status = PolicyStatus.EXPIRED

    # -- claim lifecycle ---------------------------------------------------

    def submit_claim(self, ledger: Ledger, policy_id: str, claimant: AccountId,
                     y_fraction: FixedAmount, at: BlockTime,
                     loss_claimed: Optional[FixedAmount] = None) -> InsuranceClaim:
        policy = self.policies.get(policy_id)
        if policy is None:
            raise StateError(f"no policy {policy_id}")
        if policy.status is not PolicyStatus.ACTIVE:
            raise StateError(f"policy {policy_id} is {policy.status.value}")
        if at.height >= policy.expires_at:
            raise StateError(f"policy {policy_id} expired at {policy.expires_at}")
        if self.open_claim_for(policy_id) is not None:
            raise StateError(f"policy {policy_id} already has an open claim")
        bond = y_fraction * policy.insured_value
        if bond.raw <= 0:
            raise ParameterError("claim bond must be > 0")
        loss = loss_claimed if loss_claimed is not None else policy.insured_value
        if loss.raw <= 0:
            raise ParameterError("claimed loss must be > 0")
        claim_id = f"icl-{self._counter}"
        self._counter += 1
        escrow = self._escrow_for(ledger, claim_id)
        escrow.take(claimant.value, bond, "claim-bond")
        claim = InsuranceClaim(
            claim_id=claim_id, policy_id=policy_id, claimant=claimant,
            claim_bond=bond, loss_claimed=loss, opened_at=at.height,
            challenge_end=at.height + self.params.tau_challenge)
        claim.last_bond[claimant.value] = bond
        self.claims[claim_id] = claim
        return claim

    def join_claim(self, ledger: Ledger, claim: InsuranceClaim, account: AccountId,
                   loss_claimed: FixedAmount, w_fraction: FixedAmount,
                   at: BlockTime) -> Joiner:
        if claim.phase is not ClaimPhase.CHALLENGEABLE:
            raise StateError(f"claim {claim.claim_id} no longer accepts joiners")
        if at.height >= claim.challenge_end:
            raise StateError("challenge window closed")
        if loss_claimed.raw <= 0:
            raise ParameterError("claimed loss must be > 0")
        parties = {claim.claimant.value} | {j.account.value for j in claim.joiners}
        if account.value in parties:
            raise StateError(f"{account.value} is already part of the claim")
        policy = self.policies[claim.policy_id]
        bond = w_fraction * policy.insured_value
        if bond.raw <= 0:
            raise ParameterError("join bond must be > 0")
        self._escrow_for(ledger, claim.claim_id).take(account.value, bond, "join-bond")
        joiner = Joiner(account=account, loss_claimed=loss_claimed, bond=bond)
        claim.joiners.append(joiner)
        return joiner

    def dispute_claim(self, ledger: Ledger, claim: InsuranceClaim,
                      challenger: AccountId, z_fraction: FixedAmount,
                      at: BlockTime) -> Dispute:
        if claim.phase is not ClaimPhase.CHALLENGEABLE:
            raise StateError(f"claim {claim.claim_id} is not challengeable")
        if at.height >= claim.challenge_end:
            raise StateError("challenge window closed; claim auto-approves")
        if claim.dispute is not None:
            raise StateError("claim already disputed at this level")
        if challenger.value == claim.claimant.value:
            raise ParameterError("claimant cannot dispute their own claim")
        policy = self.policies[claim.policy_id]
        bond = z_fraction * policy.insured_value
        if bond.raw <= 0:
            raise ParameterError("dispute bond must be > 0")
        self._escrow_for(ledger, claim.claim_id).take(
            challenger.value, bond, "dispute-bond")
        claim.dispute = Dispute(challenger=challenger, bond=bond, opened_at=at.height)
        claim.last_bond[challenger.value] = bond
        claim.phase = ClaimPhase.VOTING
        claim.vote_end = at.height + self.params.tau_vote
        claim.votes = VoteBox(at.height, claim.vote_end,
                              self.params.vote_min_deposit,
                              (SIDE_APPROVE, SIDE_REJECT))
        return claim.dispute

    def cast_vote(self, ledger: Ledger, claim: InsuranceClaim, voter: AccountId,
                  deposit: FixedAmount, side: str, at: BlockTime) -> None:
        if claim.phase is not ClaimPhase.VOTING or claim.votes is None:
            raise StateError(f"claim {claim.claim_id} is not in a voting round")
        vote = claim.votes.cast(voter, deposit, side, at.height)
        self._escrow_for(ledger, claim.claim_id).take(
            voter.value, vote.deposit, f"vote:{side}")

    def escalate(self, ledger: Ledger, claim: InsuranceClaim, party: AccountId,
                 at: BlockTime) -> None:
        """Buy a fresh voting round; only the claimant or challenger may,
        posting their previous bond scaled by the escalation multiplier."""
        if claim.phase is not ClaimPhase.PENDING_FINAL:
            raise StateError(f"claim {claim.claim_id} has no pending outcome")
        if claim.escalation_level >= self.params.max_escalations:
            raise StateError("escalation limit reached; outcome is final")
        if claim.dispute is None:
            raise StateError("undisputed claims cannot be escalated")
        if party.value not in (claim.claimant.value, claim.dispute.challenger.value):
            raise ParameterError(f"{party.value} is not a party to the claim")
        bond = claim.last_bond[party.value] * self.params.escalation_bond_multiplier
        self._escrow_for(ledger, claim.claim_id).take(
            party.value, bond, f"escalation-bond:L{claim.escalation_level + 1}")
        claim.last_bond[party.value] = bond
        claim.escalation_level += 1
        claim.escalation_bonds.append(
            EscalationBond(party=party.value, amount=bond, level=claim.escalation_level))
        claim.pending_outcome = None
        if claim.votes is not None:
            claim.past_votes.append(claim.votes)
        claim.phase = ClaimPhase.VOTING
        claim.vote_end = at.height + self.params.tau_vote
        claim.votes = VoteBox(at.height, claim.vote_end,
                              self.params.vote_min_deposit,
                              (SIDE_APPROVE, SIDE_REJECT))

    def step_deadlines(self, ledger: Ledger, claim: InsuranceClaim,
                       at: BlockTime) -> Optional[Resolution]:
        """Advance the claim when a window expires; returns the final
        resolution when one is executed this block."""
        if claim.phase is ClaimPhase.CHALLENGEABLE and at.height >= claim.challenge_end:
            return self._finalize(ledger, claim, SIDE_APPROVE)
        if claim.phase is ClaimPhase.VOTING and at.height >= claim.vote_end:
            outcome = claim.votes.winner(tie_side=SIDE_REJECT)
            if claim.escalation_level >= self.params.max_escalations:
                return self._finalize(ledger, claim, outcome)
            claim.pending_outcome = outcome
            claim.decided_at = at.height
            claim.phase = ClaimPhase.PENDING_FINAL
            return None
        if claim.phase is ClaimPhase.PENDING_FINAL and \
                at.height >= claim.decided_at + self.params.escalation_window:
            return self._finalize(ledger, claim, claim.pending_outcome)
        return None

    # -- settlement --------------------------------------------------------

    def _finalize(self, ledger: Ledger, claim: InsuranceClaim,
                  outcome: str) -> Resolution:
        policy = self.policies[claim.policy_id]
        params = self.params
        escrow = self._escrows[claim.claim_id]
        policy_escrow = self._escrows[claim.policy_id]
        transfers: list[Transfer] = []

        def payout(src: CaseEscrow, to: str, amount: FixedAmount, reason: str):
            if amount.raw > 0:
                src.pay(to, amount, reason)
                transfers.append(Transfer(to, amount, reason))

        def return_votes_and_dispute():
            rounds = claim.past_votes + ([claim.votes] if claim.votes else [])
            for votebox in rounds:
                for vote in votebox.votes:
                    payout(escrow, vote.voter.value, vote.deposit, "deposit-return")
            if claim.dispute is not None:
                payout(escrow, claim.dispute.challenger.value, claim.dispute.bond,
                       "dispute-bond-return")

        if outcome == SIDE_APPROVE:
            claim.phase = ClaimPhase.APPROVED
            bond_cut = params.alpha_comp * policy.insurer_bond
            principal = min(policy.insured_value,
                            ledger.balance(policy.insurer.value, self.token))
            if principal.raw > 0:
                escrow.take(policy.insurer.value, principal, "compensation-principal")
            policy_escrow.pay(escrow.account, bond_cut, "insurer-bond-slash")
            escrow.total_in = escrow.total_in + bond_cut
            compensation = principal + bond_cut
            weights = [(claim.claimant.value, claim.loss_claimed)]
            weights += [(j.account.value, j.loss_claimed) for j in claim.joiners]
            for key, cut in pro_rata(compensation, weights, claim.claimant.value):
                payout(escrow, key, cut, "compensation")
            payout(escrow, claim.claimant.value, claim.claim_bond, "bond-return")
            for joiner in claim.joiners:
                payout(escrow, joiner.account.value, joiner.bond, "bond-return")
            for esc in claim.escalation_bonds:
                if esc.party == claim.claimant.value:
                    payout(escrow, esc.party, esc.amount, "escalation-return")
                else:
                    payout(escrow, claim.claimant.value, esc.amount,
                           "escalation-forfeit")
            return_votes_and_dispute()
            # an approved claim consumes the policy; the rest of the bond returns
            payout(policy_escrow, policy.insurer.value,
                   policy.insurer_bond - bond_cut, "bond-release")
            policy.status = PolicyStatus.CLAIMED
            policy_escrow.close()
            slashed = bond_cut
        else:
            claim.phase = ClaimPhase.REJECTED
            # floor-rounded per-bond slashes keep the pooled penalty at or
            # below gamma * (claim bond + joined bonds)
            gamma = params.gamma_pen.as_fraction()
            cut_claim = FixedAmount(int(gamma * claim.claim_bond.raw))
            cuts = [(j, FixedAmount(int(gamma * j.bond.raw))) for j in claim.joiners]
            slashed = cut_claim
            for _, cut in cuts:
                slashed = slashed + cut
            challenger = claim.dispute.challenger if claim.dispute else None
            weights = []
            if challenger is not None:
                weights.append((challenger.value, claim.dispute.bond))
            if claim.votes is not None:
                weights += [(v.voter.value, v.deposit)
                            for v in claim.votes.voters_for(SIDE_REJECT)]
            fallback = challenger.value if challenger is not None else self.treasury
            for key, cut in pro_rata(slashed, weights, fallback):
                payout(escrow, key, cut, "penalty-award")
            payout(escrow, claim.claimant.value, claim.claim_bond - cut_claim,
                   "bond-return")
            for joiner, cut in cuts:
                payout(escrow, joiner.account.value, joiner.bond - cut, "bond-return")
            for esc in claim.escalation_bonds:
                if challenger is not None and esc.party == challenger.value:
                    payout(escrow, esc.party, esc.amount, "escalation-return")
                else:
                    payout(escrow, fallback, esc.amount, "escalation-forfeit")
            return_votes_and_dispute()

        escrow.close()
        return Resolution(outcome=claim.phase.value, slashed=slashed,
                          transfers=transfers)

    def snapshot(self) -> dict:
        """JSON-ready policy book with per-claim lifecycle states."""
        return {
            pid: {
                "insurer": p.insurer.value,
                "insured": p.insured.value,
                "insured_value": str(p.insured_value),
                "insurer_bond": str(p.insurer_bond),
                "expires_at": p.expires_at,
                "status": p.status.value,
                "claims": {
                    cid: {"phase": c.phase.value,
                          "claimant": c.claimant.value,
                          "claim_bond": str(c.claim_bond),
                          "joiners": len(c.joiners),
                          "escalation_level": c.escalation_level}
                    for cid, c in sorted(self.claims.items())
                    if c.policy_id == pid},
            }
            for pid, p in sorted(self.policies.items())
        }
