import { estimateRate, submitRate, type RateResult } from "../api.js";
import { navigate } from "../router.js";
import { clearSession, getSession } from "../session.js";
import { showToast } from "../toast.js";

/**
 * Rating page: URL input plus like/dislike. A click first fetches a gas
 * estimate and shows it in a confirmation modal; only confirming submits
 * the transaction.
 */
export function rateView(root: HTMLElement): void {
  const session = getSession()!;
  root.innerHTML = `
    <section class="card">
      <h2>Rate a resource</h2>
      <p id="whoami">signed in as <code>${session.userId}</code>
        via ${session.provider}</p>
      <input id="resource-url" type="url" placeholder="https://…" />
      <div class="vote-buttons">
        <button type="button" id="like-btn">&#128077; Like</button>
        <button type="button" id="dislike-btn">&#128078; Dislike</button>
      </div>
      <div id="confirm-host"></div>
      <p>
        <a id="see-ratings" href="#/history">See ratings</a> &middot;
        <a id="logout" href="#/login">Sign out</a>
      </p>
    </section>`;

  const urlInput = document.getElementById("resource-url") as HTMLInputElement;
  const confirmHost = document.getElementById("confirm-host")!;

  async function beginRate(vote: boolean): Promise<void> {
    confirmHost.innerHTML = "";
    let estimate: RateResult;
    try {
      estimate = await estimateRate(urlInput.value, vote);
    } catch (err) {
      showToast(err instanceof Error ? err.message : String(err), "error");
      return;
    }
    openConfirm(estimate, vote);
  }

  function openConfirm(estimate: RateResult, vote: boolean): void {
    confirmHost.innerHTML = `
      <div class="modal" id="confirm-modal">
        <p>${vote ? "Like" : "Dislike"}
           <code>${estimate.resource}</code>?</p>
        <p>Estimated cost:
          <b id="estimate-gas">${estimate.gas_receipt.gas_used}</b> gas
          (${estimate.gas_receipt.currency_cost} units,
          ${estimate.outcome} branch)</p>
        <button type="button" id="confirm-rate">Confirm</button>
        <button type="button" id="cancel-rate">Cancel</button>
      </div>`;
    confirmHost.querySelector("#cancel-rate")!.addEventListener("click", () => {
      confirmHost.innerHTML = "";
    });
    confirmHost.querySelector("#confirm-rate")!.addEventListener(
      "click",
      async () => {
        confirmHost.innerHTML = "";
        try {
          const result = await submitRate(estimate.resource, vote);
          showToast(`Rating recorded (${result.outcome}).`, "success");
          await navigate("#/history");
        } catch (err) {
          showToast(err instanceof Error ? err.message : String(err), "error");
        }
      },
    );
  }

  document.getElementById("like-btn")!
    .addEventListener("click", () => beginRate(true));
  document.getElementById("dislike-btn")!
    .addEventListener("click", () => beginRate(false));
  document.getElementById("see-ratings")!.addEventListener("click", (ev) => {
    ev.preventDefault();
    navigate("#/history");
  });
  document.getElementById("logout")!.addEventListener("click", (ev) => {
    ev.preventDefault();
    clearSession();
    navigate("#/login");
  });
}
