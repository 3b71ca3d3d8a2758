import { apiBase } from "./config.js";
import { getSession } from "./session.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface Session {
  session_token: string;
  user_id: string;
  provider: string;
  expires_at: number;
}

export interface GasReceipt {
  gas_used: number;
  currency_cost: string;
}

export interface RateResult {
  resource: string;
  outcome: string;
  status?: string;
  tx_id?: string;
  gas_receipt: GasReceipt;
}

export interface RatingRow {
  resource: string;
  likes: number;
  dislikes: number;
}

export interface HistoryRow {
  resource: string;
  vote: boolean;
}

let inflight = 0;

/**
 * Resolves once no gateway request is in flight and all handler
 * continuations behind the last response have run. Tests await this
 * instead of sleeping.
 */
export async function idle(): Promise<void> {
  do {
    await new Promise((resolve) => setTimeout(resolve, 0));
  } while (inflight > 0);
}

async function request<T>(
  method: string,
  path: string,
  body?: unknown,
): Promise<T> {
  inflight += 1;
  try {
    const headers: Record<string, string> = {};
    const session = getSession();
    if (session) {
      headers["Authorization"] = `Bearer ${session.token}`;
    }
    if (body !== undefined) {
      headers["Content-Type"] = "application/json";
    }
    const response = await fetch(apiBase() + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json();
    if (!response.ok) {
      throw new ApiError(
        response.status,
        payload.code ?? "error",
        payload.message ?? `HTTP ${response.status}`,
      );
    }
    return payload as T;
  } finally {
    inflight -= 1;
  }
}

export function login(provider: string, credential: string): Promise<Session> {
  return request<Session>("POST", "/auth", { provider, credential });
}

/** Dry-run: price the rating without submitting anything. */
export function estimateRate(url: string, vote: boolean): Promise<RateResult> {
  return request<RateResult>("POST", "/rate?estimate=true", { url, vote });
}

export function submitRate(url: string, vote: boolean): Promise<RateResult> {
  return request<RateResult>("POST", "/rate", { url, vote });
}

export function listResources(): Promise<RatingRow[]> {
  return request<RatingRow[]>("GET", "/resources");
}

export function userHistory(userId: string): Promise<HistoryRow[]> {
  return request<HistoryRow[]>("GET", `/history/${userId}`);
}
