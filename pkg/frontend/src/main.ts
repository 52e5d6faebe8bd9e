/** Page bootstrap: read the session id from the query string, build the
 * controller against the same origin, and poll for updates. Restoration
 * steps are human-paced, so a 2 s poll (configurable via ?poll=ms) is
 * plenty.
 */

import { ApiClient } from "./api.js";
import { Console } from "./app.js";

const params = new URLSearchParams(window.location.search);
const sessionId = params.get("session");
const pollMs = Number(params.get("poll") ?? "2000");

const root = document.getElementById("console-root");
if (root) {
    if (!sessionId) {
        root.textContent = "Open this page with ?session=<id> to follow a restoration session.";
    } else {
        const console_ = new Console(root, new ApiClient(""), sessionId);
        void console_.refresh();
        if (pollMs > 0) {
            window.setInterval(() => void console_.refresh(), pollMs);
        }
    }
}
