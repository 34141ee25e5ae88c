/** Optional integration run against a live backend (started separately,
 * e.g. `xnarr serve --config samples/config.offline.json`):
 *
 *   XNARR_SERVICE_URL=http://127.0.0.1:8077 npx vitest run test/live.test.ts
 *
 * Drives the same scripted session as the mock-backed test, but over
 * real HTTP.
 */

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { App } from "../src/app.js";
import { SAMPLE_ARTIFACTS } from "../src/samples.js";
import { DIMENSIONS, type SessionPayload } from "../src/types.js";

const serviceUrl = process.env.XNARR_SERVICE_URL;

describe.skipIf(!serviceUrl)("live service session", () => {
  it("start -> 2 feedback turns -> confirm against the running backend", async () => {
    document.body.innerHTML = '<main id="app"></main>';
    const client = new ApiClient(serviceUrl as string);
    expect((await client.health()).status).toBe("ok");

    const app = new App(document.getElementById("app") as HTMLElement, client);
    await app.start(
      JSON.parse(JSON.stringify(SAMPLE_ARTIFACTS["diabetes risk (healthcare)"])),
      "patient",
      true,
    );
    const session = app.session as SessionPayload;
    expect(session.status).toBe("active");

    const matchesServer = async () => {
      const server = await client.getSession(session.session_id);
      for (const dim of DIMENSIONS) {
        const shown = document.querySelector(
          `[data-testid="pref-${dim}"]`,
        ) as HTMLElement;
        expect(shown.textContent).toBe(String(server.s[dim]));
      }
      return server;
    };

    await matchesServer();
    await app.submitFeedback("more technical please");
    const afterFirst = await matchesServer();
    expect(afterFirst.turns).toBe(2);
    await app.submitFeedback("shorter");
    const afterSecond = await matchesServer();
    expect(afterSecond.turns).toBe(3);

    await app.confirmProfile();
    const confirmed = await matchesServer();
    expect(confirmed.status).toBe("confirmed");
    expect(
      (document.querySelector('[data-testid="feedback-input"]') as HTMLInputElement)
        .disabled,
    ).toBe(true);
  });
});
