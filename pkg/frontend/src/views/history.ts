import { listResources, userHistory } from "../api.js";
import { navigate } from "../router.js";
import { getSession } from "../session.js";

/**
 * All rated resources with their counts, plus the signed-in user's own
 * current vote per row. Counts are displayed exactly as the gateway
 * returned them — no client-side arithmetic.
 */
export async function historyView(root: HTMLElement): Promise<void> {
  const session = getSession()!;
  const [rows, mine] = await Promise.all([
    listResources(),
    userHistory(session.userId),
  ]);
  const myVotes = new Map(mine.map((h) => [h.resource, h.vote]));

  const body = rows.map((row) => {
    const vote = myVotes.has(row.resource)
      ? (myVotes.get(row.resource) ? "like" : "dislike")
      : "";
    return `
      <tr data-resource="${row.resource}">
        <td class="resource">${row.resource}</td>
        <td class="likes">${row.likes}</td>
        <td class="dislikes">${row.dislikes}</td>
        <td class="my-vote">${vote}</td>
      </tr>`;
  }).join("");

  root.innerHTML = `
    <section class="card">
      <h2>Rated resources</h2>
      <table id="ratings-table">
        <thead>
          <tr><th>resource</th><th>likes</th><th>dislikes</th><th>yours</th></tr>
        </thead>
        <tbody>${body}</tbody>
      </table>
      ${rows.length === 0 ? `<p id="empty-state">Nothing rated yet.</p>` : ""}
      <p><a id="back-to-rate" href="#/rate">Rate a resource</a></p>
    </section>`;

  document.getElementById("back-to-rate")!.addEventListener("click", (ev) => {
    ev.preventDefault();
    navigate("#/rate");
  });
}
