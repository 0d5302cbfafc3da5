// HTTP client for the gateway. Every mutation the UI can make flows
// through here (chat + sim endpoints); the UI holds no private channel.

import type {
  ChatResponse, ClockPayload, DevicesPayload, LogPayload, RulesPayload,
} from './types.js';

export class ApiError extends Error {
  constructor(public status: number, public code: string, message: string) {
    super(message);
    this.name = 'ApiError';
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      const error = (body as { error?: { code?: string; message?: string } }).error;
      throw new ApiError(response.status, error?.code ?? 'http_error',
        error?.message ?? `HTTP ${response.status}`);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(payload),
    });
  }

  chat(sessionId: string, utterance: string): Promise<ChatResponse> {
    return this.post('/v1/chat', { session_id: sessionId, utterance });
  }

  devices(): Promise<DevicesPayload> {
    return this.request('/v1/devices');
  }

  rules(): Promise<RulesPayload> {
    return this.request('/v1/rules');
  }

  log(since = 0): Promise<LogPayload> {
    return this.request(`/v1/log?since=${since}`);
  }

  advanceClock(seconds: number): Promise<ClockPayload> {
    return this.post('/v1/sim/clock', { advance_seconds: seconds });
  }

  injectState(deviceId: string, body: { on?: boolean; value?: number; unit?: string }) {
    return this.post(`/v1/sim/device/${deviceId}/state`, body);
  }
}
